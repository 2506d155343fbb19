#!/usr/bin/env python3
"""
pathint main module entry point

This allows running pathint as a module:
    python -m pathint propagator --potential harmonic --beta 1
    python -m pathint pimc --config run.cfg --format csv
"""

from .cli import main

if __name__ == "__main__":
    main()
