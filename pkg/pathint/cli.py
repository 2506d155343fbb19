"""Command line interface for pathint."""

import argparse
import logging
import math
import os
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NoReturn, TextIO

from .errors import PathIntegralError
from .gaussian import (
    PolePrescription,
    dirichlet_green,
    feynman_green_exact,
    feynman_green_limit,
    feynman_green_qm,
    fourier_green,
    free_propagator,
    ho_partition_function,
    ho_propagator,
    infinite_green,
    lattice_propagator,
    partition_function_quadrature,
)
from .instanton import (
    Endpoints,
    InstantonParams,
    calibrate_from_oracle,
    dilute_gas_propagator,
    energy_splitting,
    instanton_action,
    sector_table,
)
from .model import FixedEndpoints, Lattice, PeriodicBoundary, Potential, PotentialKind, Signature
from .output import build_manifest, emit, render_csv, render_json, sidecar_path, to_jsonable
from .perturbation import ground_state_routes
from .pimc import (
    SamplerConfig,
    correlation_function,
    effective_gap,
    position_moment,
    run_sampler,
    virial_energy,
)
from .pimc.estimators import JACKKNIFE_BLOCKS
from .spectral import (
    DEFAULT_POINTS,
    SpectralGrid,
    bloch_band,
    default_grid,
    diagonalize,
    spectral_partition,
)
from .topology import (
    InterferenceSetup,
    StatisticsPhase,
    ab_relative_phase,
    dirac_charge_unit,
    dirac_string_phase,
    flux_quantum,
    statistics_solutions,
    string_is_invisible,
    two_slit_intensity,
)
from .validate import (
    SCHEMAS,
    RunConfig,
    ValidationResult,
    parse_config_file,
    print_validation_results,
    validate_params,
)
from .wick import (
    disconnected_cancellation_check,
    enumerate_pairings,
    euclidean_first_order_ke_ratio,
    first_order_two_point_terms,
    pairing_count,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(module)-12s] %(message)s"
OUTPUT_DIR_ENV = "PATHINT_OUTPUT_DIR"
FORMATS = ("json", "csv")
TOPOLOGY_VERBS = ("ab", "statistics", "dirac")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


@dataclass
class CommandOutput:
    """What a subcommand produced: a JSON result and one CSV table."""

    result: dict[str, Any]
    rows: list[dict[str, Any]]
    columns: tuple[str, ...]
    manifest_extra: dict[str, Any] = field(default_factory=dict)


def _potential(params: dict[str, Any]) -> Potential:
    return Potential(
        PotentialKind(params["potential"]),
        m=params["m"],
        omega=params["omega"],
        lam=params["lam"],
        a=params["a"],
        period=params["period"],
        depth=params["depth"],
        hbar=params["hbar"],
    )


def propagator_command(run: RunConfig) -> CommandOutput:
    """Closed-form propagator, optionally against the N-slice lattice."""
    p = run.params
    signature = Signature(p["signature"])
    if p["potential"] == "free":
        value = free_propagator(p["q"], p["qp"], p["beta"], p["m"], signature, p["hbar"])
    else:
        value = ho_propagator(
            p["q"], p["qp"], p["beta"], p["m"], p["omega"], signature, p["hbar"]
        )
    result: dict[str, Any] = {
        "potential": p["potential"],
        "signature": signature.value,
        "value": value.value,
        "prefactor_modulus": value.prefactor_modulus,
        "phase": value.phase,
        "classical_action": value.classical_action,
    }
    if p["n_slices"] > 0 and signature is Signature.EUCLIDEAN:
        lattice = Lattice(p["n_slices"], p["beta"])
        lattice_value = lattice_propagator(p["q"], p["qp"], lattice, _potential(p))
        result["n_slices"] = p["n_slices"]
        result["lattice_value"] = lattice_value
        result["lattice_relative_error"] = abs(lattice_value - value.value) / abs(value.value)
    return CommandOutput(
        result,
        [result],
        ("potential", "signature", "value", "classical_action", "lattice_value"),
    )


def partition_command(run: RunConfig) -> CommandOutput:
    """Z(beta) by every available route."""
    p = run.params
    potential = _potential(p)
    rows = []
    if potential.kind is PotentialKind.HARMONIC:
        rows.append({"method": "closed_form", "value": ho_partition_function(p["beta"], p["omega"], p["hbar"])})
        rows.append(
            {
                "method": "quadrature",
                "value": partition_function_quadrature(p["beta"], p["m"], p["omega"], p["hbar"]),
            }
        )
    z = spectral_partition(potential, p["beta"], n_states=p["n_states"])
    rows.append({"method": "spectrum", "value": z})
    result = {"beta": p["beta"], "potential": p["potential"], "routes": rows}
    return CommandOutput(result, rows, ("method", "value"))


def green_command(run: RunConfig) -> CommandOutput:
    """One Green's function value."""
    p = run.params
    kind, tau, tau_prime = p["kind"], p["tau"], p["tau_prime"]
    result: dict[str, Any] = {"kind": kind, "tau": tau, "tau_prime": tau_prime}
    if kind == "dirichlet":
        result["value"] = float(dirichlet_green(tau, tau_prime, p["beta"], p["m"], p["omega"]))
    elif kind == "infinite":
        result["value"] = float(infinite_green(tau, tau_prime, p["m"], p["omega"]))
    elif kind == "fourier":
        result["value"] = fourier_green(tau - tau_prime, p["m"], p["omega"])
    elif p["epsilon"] is None:
        ladder = feynman_green_limit(tau - tau_prime, p["omega"])
        result["value"] = ladder.extrapolated
        result["ladder"] = [
            {"epsilon": e, "value": v} for e, v in zip(ladder.epsilons, ladder.values)
        ]
    else:
        prescription = PolePrescription(p["epsilon"])
        result["value"] = feynman_green_qm(tau - tau_prime, p["omega"], prescription)
        result["contour_value"] = feynman_green_exact(tau - tau_prime, p["omega"], p["epsilon"])
    return CommandOutput(result, [result], ("kind", "tau", "tau_prime", "value"))


def wick_command(run: RunConfig) -> CommandOutput:
    """Pairings, first-order term tables and the disconnected cancellation."""
    p = run.params
    report = p["report"]
    if report == "pairings":
        pairings = enumerate_pairings(p["n_points"])
        rows = [
            {"index": i, "pairs": " ".join(f"({a},{b})" for a, b in pairing.pairs)}
            for i, pairing in enumerate(pairings)
        ]
        result = {
            "n_points": p["n_points"],
            "count": len(pairings),
            "closed_form_count": pairing_count(p["n_points"]),
            "pairings": [pairing.pairs for pairing in pairings],
        }
        return CommandOutput(result, rows, ("index", "pairs"))

    if report == "first-order":
        terms = first_order_two_point_terms(Signature(p["signature"]))
        rows = [
            {
                "multiplicity": term.multiplicity,
                "coefficient": str(term.coefficient),
                "symmetry_factor": str(term.symmetry_factor),
                "connected": term.is_connected,
                "kernels": " ".join(f"G({i},{j})" for i, j in term.kernel_factors),
                "integrated": " ".join(term.integrated_labels),
            }
            for term in terms
        ]
        result = {
            "signature": p["signature"],
            "total_assignments": sum(term.multiplicity for term in terms),
            "terms": rows,
        }
        return CommandOutput(
            result,
            rows,
            ("multiplicity", "coefficient", "symmetry_factor", "connected", "kernels", "integrated"),
        )

    if report == "ratio":
        ratio = euclidean_first_order_ke_ratio(p["beta"], p["m"], p["omega"], p["lam"], p["hbar"])
        closed = p["lam"] * p["hbar"] / (32.0 * p["m"] ** 2 * p["omega"] ** 2)
        result = {"beta": p["beta"], "ratio": ratio, "closed_form": closed}
        return CommandOutput(result, [result], ("beta", "ratio", "closed_form"))

    check = disconnected_cancellation_check(p["beta"], p["m"], p["omega"], p["lam"], p["hbar"])
    result = {
        "numerator": check.numerator,
        "denominator": check.denominator,
        "ratio": check.ratio,
        "disconnected_coefficient": check.disconnected_coefficient,
        "cancels": check.cancels,
        "surviving": check.surviving,
        "free_value": check.free_value,
        "first_order_value": check.first_order_value,
    }
    return CommandOutput(result, [result], ("cancels", "free_value", "first_order_value"))


def perturb_command(run: RunConfig) -> CommandOutput:
    """Ground-state energy by formula, Wick log slope and oracle."""
    p = run.params
    routes = ground_state_routes(p["m"], p["omega"], p["lam"], p["hbar"])
    rows = [
        {"route": name, "value": e.value, "order": e.order.value, "error_bar": e.error_bar}
        for name, e in routes.items()
    ]
    return CommandOutput({"routes": rows}, rows, ("route", "value", "order", "error_bar"))


def _separations(lattice: Lattice, max_separation: float | None) -> list[float]:
    limit = lattice.extent / 4.0 if max_separation is None else max_separation
    k_max = min(int(math.floor(limit / lattice.spacing + 1e-9)), lattice.n_slices // 2 - 1)
    return [k * lattice.spacing for k in range(max(k_max, 0) + 1)]


def pimc_command(run: RunConfig) -> CommandOutput:
    """Sample, then reduce to moments, correlators and effective gaps."""
    p = run.params
    lattice = Lattice(p["n_slices"], p["beta"])
    boundary = (
        PeriodicBoundary() if p["boundary"] == "periodic" else FixedEndpoints(p["q"], p["qp"])
    )
    config = SamplerConfig(
        lattice=lattice,
        potential=_potential(p),
        n_sweeps=p["n_sweeps"],
        n_thermalization=p["n_thermalization"],
        n_chains=p["n_chains"],
        step_width=p["step_width"],
        seed=p["seed"],
        boundary=boundary,
        auto_tune=p["auto_tune"],
        shift_width=p["shift_width"],
        record_every=p["record_every"],
        start=p["start"],
    )
    ensemble = run_sampler(config)

    estimates = [position_moment(ensemble, 1), position_moment(ensemble, 2)]
    if config.periodic:
        estimates.append(virial_energy(ensemble))
        taus = _separations(lattice, p["max_separation"])
        estimates.extend(correlation_function(ensemble, taus))
        if ensemble.n_records >= JACKKNIFE_BLOCKS and len(taus) > 1:
            estimates.extend(effective_gap(ensemble, taus[:-1], p["gap_method"]))
        else:
            logger.warning("Too few records or separations for effective gaps; skipped")
    else:
        middle = lattice.n_slices // 2
        estimates.append(position_moment(ensemble, 1, site=middle))
        estimates.append(position_moment(ensemble, 2, site=middle))

    rows = [e.as_row() for e in estimates]
    result = {
        "acceptance_rate": ensemble.acceptance_rate,
        "chain_acceptance": ensemble.chain_acceptance,
        "shift_acceptance": ensemble.shift_acceptance,
        "step_width": ensemble.step_width,
        "n_records": ensemble.n_records,
        "estimators": rows,
    }
    return CommandOutput(
        result,
        rows,
        ("observable", "tau", "mean", "std_error", "n_effective"),
        {"acceptance_rate": ensemble.acceptance_rate},
    )


def spectrum_command(run: RunConfig) -> CommandOutput:
    """Finite-difference eigenpairs, or the Bloch band energy of a periodic potential."""
    p = run.params
    potential = _potential(p)
    if potential.kind is PotentialKind.PERIODIC:
        energy = bloch_band(potential, p["theta"])
        result = {"theta": p["theta"], "band_energy": energy}
        return CommandOutput(result, [result], ("theta", "band_energy"))

    grid: SpectralGrid | None = None
    if p["q_max"] is not None:
        grid = SpectralGrid(-p["q_max"], p["q_max"], p["n_points"])
    elif p["n_points"] != DEFAULT_POINTS:
        grid = default_grid(potential, p["n_points"])
    spectrum = diagonalize(potential, grid, n_states=p["n_states"])
    states = [
        {"state": j, "energy": float(e), "error": float(err)}
        for j, (e, err) in enumerate(zip(spectrum.eigenvalues, spectrum.eigenvalue_errors))
    ]
    result: dict[str, Any] = {
        "grid": spectrum.grid,
        "edge_amplitude": spectrum.edge_amplitude,
        "states": states,
    }
    if potential.kind is PotentialKind.DOUBLE_WELL and spectrum.n_states >= 2:
        result["splitting"] = float(spectrum.eigenvalues[1] - spectrum.eigenvalues[0])

    if p["eigenfunctions"]:
        columns = ("q",) + tuple(f"phi_{j}" for j in range(spectrum.n_states))
        rows = [
            {"q": float(q), **{f"phi_{j}": float(spectrum.eigenfunctions[i, j]) for j in range(spectrum.n_states)}}
            for i, q in enumerate(spectrum.grid.points())
        ]
        return CommandOutput(result, rows, columns)
    return CommandOutput(result, states, ("state", "energy", "error"))


def instanton_command(run: RunConfig) -> CommandOutput:
    """Instanton action, R, splitting and the dilute-gas sector table."""
    p = run.params
    instanton_action(p["lam"], p["a"], verify=True)
    params = InstantonParams.double_well(p["lam"], p["a"], p["hbar"], p["r"])
    if p["calibrate_from_oracle"]:
        params = calibrate_from_oracle(params)
    gas = dilute_gas_propagator(
        p["beta"], params, Endpoints(p["endpoints"]), p["max_instantons"] or None
    )
    rows = sector_table(gas)
    result = {
        "params": {
            "omega": params.omega,
            "action": params.action,
            "hbar": params.hbar,
            "r": params.r,
            "provenance": params.provenance.value,
        },
        "splitting": energy_splitting(params),
        "dilute_gas": {
            "beta": gas.beta,
            "endpoints": gas.endpoints.value,
            "q": gas.q,
            "prefactor": gas.prefactor,
            "closed_form": gas.closed_form,
            "energies": gas.energies,
        },
        "sectors": rows,
    }
    return CommandOutput(result, rows, ("instantons", "weight", "partial_sum"))


def topology_command(run: RunConfig) -> CommandOutput:
    """Aharonov-Bohm phases, statistics phases or Dirac quantization."""
    p = run.params
    if run.verb == "ab":
        setup = InterferenceSetup(p["base_phase"], p["flux"], p["charge"], p["hbar"], p["c"])
        phase = ab_relative_phase(setup)
        result = {
            "flux_phase": setup.flux_phase,
            "relative_phase": phase.raw,
            "wrapped_phase": phase.wrapped,
            "intensity": two_slit_intensity(p["a1"], p["a2"], setup),
            "flux_quantum": flux_quantum(setup),
        }
        return CommandOutput(result, [result], tuple(result))

    if run.verb == "statistics":
        allowed = statistics_solutions(p["dimension"])
        result = {
            "dimension": p["dimension"],
            "allowed": "any" if allowed.discrete is None else allowed.discrete,
            "phi": p["phi"],
            "phi_allowed": allowed.contains(p["phi"]),
        }
        rows = []
        if result["phi_allowed"]:
            statistics = StatisticsPhase(p["dimension"], p["phi"])
            rows = [{"n": n, "coefficient": statistics.coefficient(n)} for n in range(-2, 3)]
            result["coefficients"] = rows
        return CommandOutput(result, rows, ("n", "coefficient"))

    unit = dirac_charge_unit(p["n"], p["g"], p["hbar"], p["c"])
    string_phase = dirac_string_phase(unit, p["g"], p["hbar"], p["c"])
    charge_phase = dirac_string_phase(p["charge"], p["g"], p["hbar"], p["c"])
    result = {
        "n": p["n"],
        "g": p["g"],
        "charge_unit": unit,
        "product": unit * p["g"],
        "string_phase": string_phase,
        "string_invisible": string_is_invisible(string_phase),
        "charge": p["charge"],
        "charge_string_phase": charge_phase,
        "charge_string_invisible": string_is_invisible(charge_phase),
    }
    return CommandOutput(result, [result], tuple(result))


HANDLERS: dict[str, Callable[[RunConfig], CommandOutput]] = {
    "propagator": propagator_command,
    "partition": partition_command,
    "green": green_command,
    "wick": wick_command,
    "perturb": perturb_command,
    "pimc": pimc_command,
    "spectrum": spectrum_command,
    "instanton": instanton_command,
    "topology": topology_command,
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors are a single stderr line."""

    def error(self, message: str) -> NoReturn:
        print(f"error: UsageError: {self.prog}: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per schema in validate.SCHEMAS."""
    common = _Parser(add_help=False)
    common.add_argument(
        "--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    common.add_argument("--format", choices=FORMATS, default="json", help="output format")
    common.add_argument(
        "--output", "-o", help=f"output file (default: ${OUTPUT_DIR_ENV}/<subcommand>.<format> or stdout)"
    )
    common.add_argument(
        "--precision", type=int, help="round result floats to N significant digits"
    )
    common.add_argument("--config", help="key=value configuration file")

    parser = _Parser(
        prog="pathint",
        description="pathint - path-integral quantum mechanics workbench",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    for name, specs in SCHEMAS.items():
        sub = subparsers.add_parser(name, parents=[common], help=HANDLERS[name].__doc__)
        if name == "topology":
            sub.add_argument("verb", choices=TOPOLOGY_VERBS, help="what to compute")
        for spec in specs:
            default_text = "" if spec.default is None else f" (default: {spec.default})"
            if spec.kind is bool:
                sub.add_argument(
                    spec.flag,
                    dest=spec.name,
                    nargs="?",
                    const="true",
                    default=argparse.SUPPRESS,
                    help=spec.help + default_text,
                )
            else:
                sub.add_argument(
                    spec.flag,
                    dest=spec.name,
                    default=argparse.SUPPRESS,
                    choices=spec.choices,
                    help=spec.help + default_text,
                )
    return parser


def _configure_logging(verbosity: int) -> None:
    level = max(logging.DEBUG, logging.WARNING - 10 * verbosity)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _output_path(args: argparse.Namespace) -> Path | None:
    if args.output:
        return Path(args.output)
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory:
        return Path(directory) / f"{args.command}.{args.format}"
    return None


def _resolve(args: argparse.Namespace) -> tuple[RunConfig, ValidationResult]:
    """
    Merge schema defaults, the config file and flags into a RunConfig.

    Raises:
        FileNotFoundError: --config names a missing file
    """
    result = ValidationResult(is_valid=True, errors=[], warnings=[])
    file_values = parse_config_file(args.config, result) if args.config else {}
    flags = {
        spec.name: getattr(args, spec.name)
        for spec in SCHEMAS[args.command]
        if hasattr(args, spec.name)
    }
    params, checked = validate_params(args.command, file_values, flags)
    result.errors.extend(checked.errors)
    result.warnings.extend(checked.warnings)
    result.is_valid = not result.errors
    if args.precision is not None and args.precision < 1:
        result.add_error("precision", "Precision must be at least 1 significant digit")
    run = RunConfig(
        subcommand=args.command,
        params=params,
        output_format=args.format,
        output=_output_path(args),
        precision=args.precision,
        verb=getattr(args, "verb", None),
        warnings=result.warnings,
    )
    return run, result


def _write(run: RunConfig, output: CommandOutput, stdout: TextIO) -> None:
    config = run.manifest_config()
    config["format"] = run.output_format
    config["precision"] = run.precision
    manifest = build_manifest(run.subcommand, config, run.seed, **output.manifest_extra)

    if run.output_format == "json":
        document = {"manifest": manifest, "result": to_jsonable(output.result, run.precision)}
        emit(render_json(document), run.output, stdout)
        return

    emit(render_csv(output.rows, output.columns, run.precision), run.output, stdout)
    if run.output is not None:
        emit(render_json({"manifest": manifest}), sidecar_path(run.output), stdout)


def dispatch(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on domain or file errors, 2 on usage errors
    """
    stdout = stdout if stdout is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        print("error: UsageError: pathint: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE

    _configure_logging(args.verbose)
    try:
        run, validation = _resolve(args)
        if not validation.is_valid:
            print(f"error: ValidationError: {validation.one_line()}", file=sys.stderr)
            return EXIT_USAGE
        if validation.warnings and args.verbose:
            print_validation_results(validation, verbose=True)
        for warning in validation.warnings:
            logger.warning("%s: %s", warning.field, warning.message)

        logger.info("Running %s with %s", run.subcommand, run.params)
        output = HANDLERS[run.subcommand](run)
        _write(run, output, stdout)
    except (PathIntegralError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main() -> None:
    """Main CLI entry point."""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
