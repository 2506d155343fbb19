"""
Run-configuration schemas and validation.

Every subcommand owns a parameter schema. Values are resolved from schema
defaults, then a key=value config file, then command-line flags, and checked
with the same ValidationResult bookkeeping for all three sources.
"""

import math
import sys
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

TRUE_WORDS = ("true", "yes", "on", "1")
FALSE_WORDS = ("false", "no", "off", "0")
NONE_WORDS = ("none", "null", "")


@dataclass
class ValidationError:
    """Represents a validation error with context."""

    field: str
    message: str
    severity: str = "error"  # "error", "warning", "info"
    path: str = ""


@dataclass
class ValidationResult:
    """Result of validation with errors and warnings."""

    is_valid: bool
    errors: list[ValidationError]
    warnings: list[ValidationError]

    def add_error(self, field: str, message: str, path: str = "") -> None:
        """Add an error to the validation result."""
        self.errors.append(ValidationError(field, message, "error", path))
        self.is_valid = False

    def add_warning(self, field: str, message: str, path: str = "") -> None:
        """Add a warning to the validation result."""
        self.warnings.append(ValidationError(field, message, "warning", path))

    def get_summary(self) -> str:
        """Get a summary of validation results."""
        if self.is_valid and not self.warnings:
            return "✅ Configuration is valid"

        summary = []
        if self.errors:
            summary.append(f"❌ {len(self.errors)} error(s)")
        if self.warnings:
            summary.append(f"⚠️  {len(self.warnings)} warning(s)")

        return " | ".join(summary)

    def one_line(self) -> str:
        """All errors joined into a single machine-parsable line."""
        return "; ".join(
            f"{e.field}: {e.message}" + (f" ({e.path})" if e.path else "") for e in self.errors
        )


def _parse_bool(raw: str) -> bool:
    word = raw.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"expected a boolean, got '{raw}'")


def _parse_float(raw: str) -> float:
    value = float(raw)
    if math.isnan(value):
        raise ValueError("NaN is not a valid parameter value")
    return value


def _parse_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got '{raw}'") from None
        return int(value)


PARSERS: dict[type, Callable[[str], Any]] = {
    bool: _parse_bool,
    int: _parse_int,
    float: _parse_float,
    str: str,
}


@dataclass(frozen=True)
class ParamSpec:
    """One schema entry: name, type, default, allowed values and help text."""

    name: str
    kind: type
    default: Any
    help: str = ""
    choices: tuple[str, ...] | None = None
    optional: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def parse(self, raw: str) -> Any:
        """Convert a raw string; raises ValueError with a readable message."""
        text = raw.strip()
        if self.optional and text.lower() in NONE_WORDS:
            return None
        value = PARSERS[self.kind](text)
        if self.choices is not None and value not in self.choices:
            raise ValueError(f"'{value}' is not one of {', '.join(self.choices)}")
        return value


def _potential_specs(
    default: str, kinds: tuple[str, ...], omega: float = 1.0
) -> tuple[ParamSpec, ...]:
    return (
        ParamSpec("potential", str, default, "potential family", kinds),
        ParamSpec("m", float, 1.0, "mass"),
        ParamSpec("omega", float, omega, "angular frequency (harmonic, anharmonic)"),
        ParamSpec("lam", float, 0.0, "quartic coupling"),
        ParamSpec("a", float, 1.0, "well separation (double well)"),
        ParamSpec("period", float, 2.0 * math.pi, "period (periodic)"),
        ParamSpec("depth", float, 1.0, "depth (periodic)"),
        ParamSpec("hbar", float, 1.0, "reduced Planck constant"),
    )


ALL_KINDS = ("free", "harmonic", "anharmonic", "double_well", "periodic")
BOUND_KINDS = ("harmonic", "anharmonic", "double_well")

SCHEMAS: dict[str, tuple[ParamSpec, ...]] = {
    "propagator": (
        *_potential_specs("harmonic", ("free", "harmonic")),
        ParamSpec("signature", str, "euclidean", "time signature", ("euclidean", "real")),
        ParamSpec("beta", float, 1.0, "extent: beta (Euclidean) or T (real time)"),
        ParamSpec("q", float, 0.0, "initial position"),
        ParamSpec("qp", float, 0.0, "final position"),
        ParamSpec("n_slices", int, 0, "also evaluate the N-slice lattice (Euclidean, 0 = off)"),
    ),
    "partition": (
        *_potential_specs("harmonic", BOUND_KINDS),
        ParamSpec("beta", float, 1.0, "inverse temperature"),
        ParamSpec("n_states", int, 64, "initial states in the spectral sum (doubled until converged)"),
    ),
    "green": (
        ParamSpec("kind", str, "dirichlet", "boundary condition",
                  ("dirichlet", "infinite", "fourier", "feynman")),
        ParamSpec("m", float, 1.0, "mass"),
        ParamSpec("omega", float, 1.0, "angular frequency"),
        ParamSpec("beta", float, 1.0, "Euclidean extent (dirichlet)"),
        ParamSpec("tau", float, 0.5, "first time argument"),
        ParamSpec("tau_prime", float, 0.5, "second time argument"),
        ParamSpec("epsilon", float, None, "pole regulator (feynman, none = epsilon ladder)",
                  optional=True),
    ),
    "wick": (
        ParamSpec("report", str, "first-order", "what to report",
                  ("first-order", "pairings", "cancellation", "ratio")),
        ParamSpec("n_points", int, 4, "points to pair (pairings report)"),
        ParamSpec("signature", str, "euclidean", "time signature", ("euclidean", "real")),
        ParamSpec("m", float, 1.0, "mass"),
        ParamSpec("omega", float, 1.0, "angular frequency"),
        ParamSpec("lam", float, 0.1, "quartic coupling"),
        ParamSpec("hbar", float, 1.0, "reduced Planck constant"),
        ParamSpec("beta", float, 40.0, "Euclidean extent for numerical evaluation"),
    ),
    "perturb": (
        ParamSpec("m", float, 1.0, "mass"),
        ParamSpec("omega", float, 1.0, "angular frequency"),
        ParamSpec("lam", float, 0.1, "quartic coupling"),
        ParamSpec("hbar", float, 1.0, "reduced Planck constant"),
    ),
    "pimc": (
        *_potential_specs("harmonic", ALL_KINDS),
        ParamSpec("beta", float, 10.0, "Euclidean extent"),
        ParamSpec("n_slices", int, 40, "time slices"),
        ParamSpec("n_sweeps", int, 20_000, "sweeps per chain, thermalization included"),
        ParamSpec("n_thermalization", int, 1_000, "discarded sweeps per chain"),
        ParamSpec("n_chains", int, 4, "independent chains"),
        ParamSpec("step_width", float, 1.0, "initial proposal half-width"),
        ParamSpec("seed", int, 0, "master seed"),
        ParamSpec("boundary", str, "periodic", "path boundary", ("periodic", "fixed")),
        ParamSpec("q", float, 0.0, "initial endpoint (fixed boundary)"),
        ParamSpec("qp", float, 0.0, "final endpoint (fixed boundary)"),
        ParamSpec("auto_tune", bool, True, "tune step_width before sampling"),
        ParamSpec("shift_width", float, 0.0, "whole-path shift size (0 = off)"),
        ParamSpec("record_every", int, 10, "sweeps between recorded paths"),
        ParamSpec("start", str, "zero", "initial path", ("zero", "left", "right", "split")),
        ParamSpec("max_separation", float, None,
                  "largest correlator separation (none = beta/4)", optional=True),
        ParamSpec("gap_method", str, "log", "effective-gap definition", ("log", "cosh")),
    ),
    "spectrum": (
        *_potential_specs("harmonic", BOUND_KINDS + ("periodic",)),
        ParamSpec("n_states", int, 8, "eigenpairs to report"),
        ParamSpec("n_points", int, 2049, "grid points"),
        ParamSpec("q_max", float, None, "grid half-width (none = automatic)", optional=True),
        ParamSpec("theta", float, 0.0, "Bloch angle (periodic)"),
        ParamSpec("eigenfunctions", bool, False, "tabulate eigenfunctions in CSV output"),
    ),
    "instanton": (
        ParamSpec("lam", float, 1.0, "double-well coupling"),
        ParamSpec("a", float, 2.0, "well separation"),
        ParamSpec("hbar", float, 1.0, "reduced Planck constant"),
        ParamSpec("r", float, None, "fluctuation ratio R (none = unset)", optional=True),
        ParamSpec("calibrate_from_oracle", bool, False, "calibrate R from the spectral splitting"),
        ParamSpec("beta", float, 30.0, "Euclidean extent of the dilute-gas sum"),
        ParamSpec("endpoints", str, "same", "well-to-well endpoints", ("same", "opposite")),
        ParamSpec("max_instantons", int, 0, "sector cutoff (0 = until converged)"),
    ),
    "topology": (
        ParamSpec("base_phase", float, 0.0, "field-free relative phase (ab)"),
        ParamSpec("flux", float, 0.0, "enclosed flux (ab)"),
        ParamSpec("charge", float, 1.0, "electric charge (ab, dirac)"),
        ParamSpec("hbar", float, 1.0, "reduced Planck constant"),
        ParamSpec("c", float, 1.0, "speed of light"),
        ParamSpec("a1", float, 1.0, "first slit amplitude (ab)"),
        ParamSpec("a2", float, 1.0, "second slit amplitude (ab)"),
        ParamSpec("dimension", int, 3, "spatial dimension (statistics)"),
        ParamSpec("phi", float, 0.0, "statistics phase (statistics)"),
        ParamSpec("g", float, 1.0, "magnetic charge (dirac)"),
        ParamSpec("n", int, 1, "quantization integer (dirac)"),
    ),
}

STOCHASTIC = {"pimc"}


def parse_config_file(
    file_path: str | Path, result: ValidationResult | None = None
) -> dict[str, str]:
    """
    Read key=value lines; '#' starts a comment and blank lines are ignored.

    Malformed lines and repeated keys are recorded on result.

    Raises:
        FileNotFoundError: the file does not exist
    """
    file_path = Path(file_path)
    if not file_path.is_file():
        raise FileNotFoundError(f"Configuration file not found: {file_path}")
    if result is None:
        result = ValidationResult(is_valid=True, errors=[], warnings=[])

    values: dict[str, str] = {}
    with open(file_path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            location = f"{file_path}:{number}"
            if "=" not in text:
                result.add_error("config", f"Expected key=value, got '{text}'", location)
                continue
            key, raw = (part.strip() for part in text.split("=", 1))
            key = key.replace("-", "_")
            if not key:
                result.add_error("config", "Empty key", location)
                continue
            if key in values:
                result.add_warning(key, "Repeated key; the last value wins", location)
            values[key] = raw
    return values


class RunConfigValidator:
    """Resolves and validates the parameters of one subcommand."""

    def __init__(self, subcommand: str) -> None:
        """Initialize the validator for a subcommand."""
        if subcommand not in SCHEMAS:
            raise KeyError(f"Unknown subcommand '{subcommand}'")
        self.subcommand = subcommand
        self.specs = {spec.name: spec for spec in SCHEMAS[subcommand]}

    def resolve(
        self,
        file_values: Mapping[str, str] | None = None,
        flag_values: Mapping[str, str] | None = None,
        result: ValidationResult | None = None,
    ) -> tuple[dict[str, Any], ValidationResult]:
        """
        Merge defaults < config file < flags and validate the result.

        Returns:
            (resolved parameters in schema order, ValidationResult)
        """
        if result is None:
            result = ValidationResult(is_valid=True, errors=[], warnings=[])
        params = {name: spec.default for name, spec in self.specs.items()}

        for source, values in (("config", file_values or {}), ("flag", flag_values or {})):
            for key, raw in values.items():
                spec = self.specs.get(key)
                if spec is None:
                    result.add_error(key, f"Unknown key for '{self.subcommand}'", source)
                    continue
                try:
                    params[key] = spec.parse(raw)
                except ValueError as e:
                    result.add_error(key, f"Invalid value: {e}", source)

        if result.is_valid:
            self._validate_ranges(params, result)
            self._validate_consistency(params, result)
        return params, result

    def _validate_ranges(self, params: Mapping[str, Any], result: ValidationResult) -> None:
        """Reject non-finite floats and non-positive counts."""
        for name, value in params.items():
            spec = self.specs[name]
            if spec.kind is float and value is not None and not math.isfinite(value):
                result.add_error(name, "Value must be finite")
            if spec.kind is int and name.startswith("n_") and value < 0:
                result.add_error(name, "Count must be non-negative")

    def _validate_consistency(self, params: Mapping[str, Any], result: ValidationResult) -> None:
        """Cross-field checks that a single value cannot express."""
        if self.subcommand == "pimc":
            if params["n_sweeps"] <= params["n_thermalization"]:
                result.add_error("n_sweeps", "n_sweeps must exceed n_thermalization")
            if params["boundary"] == "fixed" and params["shift_width"] > 0:
                result.add_warning("shift_width", "Shift moves are ignored with fixed endpoints")
            if params["potential"] == "free" and params["boundary"] == "periodic":
                result.add_warning("potential", "Free periodic paths have an unbounded zero mode")
        if self.subcommand == "propagator":
            if params["signature"] == "real" and params["n_slices"] > 0:
                result.add_warning("n_slices", "Lattice evaluation is Euclidean only; ignored")
        if self.subcommand == "instanton":
            if params["r"] is not None and params["calibrate_from_oracle"]:
                result.add_warning("r", "Calibration from the oracle overrides the supplied R")


@dataclass
class RunConfig:
    """A fully resolved invocation: what to run, with what, and where to write it."""

    subcommand: str
    params: dict[str, Any]
    output_format: str = "json"
    output: Path | None = None
    precision: int | None = None
    verb: str | None = None
    warnings: list[ValidationError] = field(default_factory=list)

    @property
    def seed(self) -> int | None:
        return self.params.get("seed") if self.subcommand in STOCHASTIC else None

    def manifest_config(self) -> dict[str, Any]:
        """Everything needed to re-run the command exactly."""
        config: dict[str, Any] = {"subcommand": self.subcommand}
        if self.verb is not None:
            config["verb"] = self.verb
        config["params"] = dict(self.params)
        return config


def validate_params(
    subcommand: str,
    file_values: Mapping[str, str] | None = None,
    flag_values: Mapping[str, str] | None = None,
) -> tuple[dict[str, Any], ValidationResult]:
    """
    Resolve and validate parameters for a subcommand.

    Args:
        subcommand: Name of the subcommand
        file_values: Raw values from a config file
        flag_values: Raw values from command-line flags

    Returns:
        (resolved parameters, ValidationResult)
    """
    return RunConfigValidator(subcommand).resolve(file_values, flag_values)


def print_validation_results(
    result: ValidationResult, verbose: bool = False, stream: TextIO | None = None
) -> None:
    """
    Print validation results in a formatted way.

    Args:
        result: ValidationResult to print
        verbose: Whether to show detailed error messages
        stream: Destination, stderr by default
    """
    out = stream if stream is not None else sys.stderr
    print(result.get_summary(), file=out)

    if verbose or not result.is_valid:
        if result.errors:
            print("\n❌ Errors:", file=out)
            for error in result.errors:
                path_str = f" ({error.path})" if error.path else ""
                print(f"  • {error.field}: {error.message}{path_str}", file=out)

        if result.warnings:
            print("\n⚠️  Warnings:", file=out)
            for warning in result.warnings:
                path_str = f" ({warning.path})" if warning.path else ""
                print(f"  • {warning.field}: {warning.message}{path_str}", file=out)
