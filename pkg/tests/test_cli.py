"""
Tests for the pathint command line interface.
"""

import io
import json
import math
import tempfile
from pathlib import Path
from typing import Any

import pytest

from pathint.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, OUTPUT_DIR_ENV, build_parser, dispatch

PIMC_ARGS = [
    "pimc",
    "--beta",
    "4",
    "--n-slices",
    "16",
    "--n-sweeps",
    "2000",
    "--n-thermalization",
    "500",
    "--n-chains",
    "2",
    "--record-every",
    "5",
    "--seed",
    "17",
]


def _run(argv: list[str]) -> tuple[int, str]:
    stdout = io.StringIO()
    code = dispatch(argv, stdout)
    return code, stdout.getvalue()


def _json(argv: list[str]) -> dict[str, Any]:
    code, text = _run(argv)
    assert code == EXIT_OK
    document: dict[str, Any] = json.loads(text)
    return document


class TestParser:
    """Test the argument parser."""

    def test_subcommands(self) -> None:
        """Test that every subcommand is registered."""
        args = build_parser().parse_args(["green", "--kind", "infinite", "--tau", "1"])
        assert args.command == "green"
        assert args.kind == "infinite"
        assert args.tau == "1"

    def test_unset_flags_absent(self) -> None:
        """Test that unspecified flags do not shadow config-file values."""
        args = build_parser().parse_args(["perturb"])
        assert not hasattr(args, "lam")

    def test_no_command(self) -> None:
        """Test that a bare invocation is a usage error."""
        assert dispatch([]) == EXIT_USAGE

    def test_bad_choice(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that argparse usage errors exit with 2 and print one line."""
        assert dispatch(["green", "--kind", "retarded"]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert err.startswith("error: UsageError: pathint green: argument --kind")
        assert len(err.strip().splitlines()) == 1

    def test_bad_type_one_line(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that a malformed common flag is reported on one line."""
        assert dispatch(["perturb", "--precision", "three"]) == EXIT_USAGE
        assert len(capsys.readouterr().err.strip().splitlines()) == 1


class TestCommands:
    """Test subcommand results."""

    def test_propagator(self) -> None:
        """Test the diagonal harmonic propagator at beta = 1."""
        document = _json(["propagator", "--beta", "1"])
        expected = 1.0 / math.sqrt(2.0 * math.pi * math.sinh(1.0))
        assert document["result"]["value"] == pytest.approx(expected, rel=1e-12)
        assert document["manifest"]["subcommand"] == "propagator"
        assert "seed" not in document["manifest"]

    def test_propagator_lattice(self) -> None:
        """Test that the lattice value is reported next to the closed form."""
        result = _json(["propagator", "--beta", "1", "--n-slices", "64"])["result"]
        assert result["lattice_relative_error"] < 1e-3

    def test_wick_first_order(self) -> None:
        """Test the 576 and 144 assignment counts."""
        result = _json(["wick", "--report", "first-order"])["result"]
        assert result["total_assignments"] == 720
        assert [row["multiplicity"] for row in result["terms"]] == [576, 144]
        assert result["terms"][0]["coefficient"] == "-lambda/2"

    def test_wick_pairings_csv(self) -> None:
        """Test the pairing table in CSV."""
        code, text = _run(["wick", "--report", "pairings", "--n-points", "4", "--format", "csv"])
        assert code == EXIT_OK
        lines = text.splitlines()
        assert lines[0] == "index,pairs"
        assert len(lines) == 4

    def test_topology_ab(self) -> None:
        """Test destructive interference at half a flux quantum."""
        result = _json(["topology", "ab", "--flux", str(math.pi)])["result"]
        assert result["intensity"] == pytest.approx(0.0, abs=1e-12)

    def test_topology_dirac(self) -> None:
        """Test the charge unit at n = 1, g = 1/2."""
        result = _json(["topology", "dirac", "--g", "0.5", "--charge", "1"])["result"]
        assert result["charge_unit"] == pytest.approx(1.0)
        assert result["string_invisible"] is True
        assert result["charge_string_invisible"] is True

    def test_topology_dirac_string_uses_unit(self) -> None:
        """Test that the string flag follows the quantized unit, not the supplied charge."""
        result = _json(["topology", "dirac", "--g", "0.5", "--n", "2", "--charge", "0.3"])["result"]
        assert result["charge_unit"] == pytest.approx(2.0)
        assert result["string_phase"] == pytest.approx(-4.0 * math.pi)
        assert result["string_invisible"] is True
        assert result["charge"] == 0.3
        assert result["charge_string_invisible"] is False

    def test_partition_small_beta(self) -> None:
        """Test that the spectral route adds states until it agrees at high temperature."""
        routes = _json(["partition", "--beta", "0.5", "--n-states", "8"])["result"]["routes"]
        values = {row["method"]: row["value"] for row in routes}
        assert values["spectrum"] == pytest.approx(values["closed_form"], rel=1e-5)

    def test_instanton_unset_r(self) -> None:
        """Test that a splitting without R fails with a configuration error."""
        code, _ = _run(["instanton"])
        assert code == EXIT_FAILURE

    def test_instanton_with_r(self) -> None:
        """Test a supplied R and the sector table."""
        result = _json(["instanton", "--r", "1.0", "--beta", "10"])["result"]
        assert result["params"]["provenance"] == "user"
        assert result["params"]["action"] == pytest.approx(3.0792, abs=1e-4)
        assert result["sectors"][0]["instantons"] == 0

    def test_precision(self) -> None:
        """Test rounding of result floats."""
        result = _json(["propagator", "--beta", "1", "--precision", "3"])["result"]
        assert result["value"] == 0.368


class TestErrors:
    """Test exit codes."""

    def test_missing_config(self) -> None:
        """Test that a missing config file exits with 1."""
        assert dispatch(["perturb", "--config", "/nonexistent/run.cfg"]) == EXIT_FAILURE

    def test_unknown_key(self) -> None:
        """Test that an unknown config key exits with 2."""
        with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as f:
            f.write("temperature = 3\n")
        try:
            assert dispatch(["perturb", "--config", f.name]) == EXIT_USAGE
        finally:
            Path(f.name).unlink()

    def test_invalid_value(self) -> None:
        """Test that a malformed flag value exits with 2."""
        assert dispatch(["perturb", "--lam", "small"]) == EXIT_USAGE

    def test_bad_precision(self) -> None:
        """Test that precision must be positive."""
        assert dispatch(["perturb", "--precision", "0"]) == EXIT_USAGE

    def test_domain_error(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that a domain error exits with 1 and names the error type."""
        assert dispatch(["topology", "dirac", "--g", "0"], io.StringIO()) == EXIT_FAILURE
        assert "error: DomainError" in capsys.readouterr().err


class TestOutputFiles:
    """Test file output, manifests and reproducibility."""

    def test_config_file_and_flags(self, tmp_path: Path) -> None:
        """Test that flags override config-file values."""
        config = tmp_path / "run.cfg"
        config.write_text("lam = 0.2\nbeta = 2\n", encoding="utf-8")
        document = _json(["wick", "--report", "ratio", "--config", str(config), "--beta", "40"])
        params = document["manifest"]["config"]["params"]
        assert params["lam"] == 0.2
        assert params["beta"] == 40.0

    def test_output_dir_env(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that PATHINT_OUTPUT_DIR names the default output file."""
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        code, text = _run(["topology", "ab"])
        assert code == EXIT_OK
        assert text == ""
        document = json.loads((tmp_path / "topology.json").read_text(encoding="utf-8"))
        assert document["manifest"]["config"]["verb"] == "ab"

    def test_csv_sidecar(self, tmp_path: Path) -> None:
        """Test that CSV files get a manifest sidecar."""
        target = tmp_path / "perturb.csv"
        assert dispatch(["topology", "statistics", "--format", "csv", "-o", str(target)]) == EXIT_OK
        assert target.read_text(encoding="utf-8").splitlines()[0] == "n,coefficient"
        sidecar = json.loads((tmp_path / "perturb.csv.manifest.json").read_text(encoding="utf-8"))
        assert sidecar["manifest"]["config"]["format"] == "csv"

    def test_pimc_reproducible(self, tmp_path: Path) -> None:
        """Test byte-identical pimc output for the same seed."""
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert dispatch([*PIMC_ARGS, "-o", str(first)]) == EXIT_OK
        assert dispatch([*PIMC_ARGS, "-o", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

        document = json.loads(first.read_text(encoding="utf-8"))
        assert document["manifest"]["seed"] == 17
        assert 0.0 <= document["manifest"]["acceptance_rate"] <= 1.0
        observables = [row["observable"] for row in document["result"]["estimators"]]
        assert observables[:3] == ["q^1", "q^2", "virial_energy"]
        assert "correlator" in observables

    def test_pimc_seed_changes_output(self, tmp_path: Path) -> None:
        """Test that a different seed changes the estimates."""
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert dispatch([*PIMC_ARGS, "-o", str(first)]) == EXIT_OK
        assert dispatch([*PIMC_ARGS[:-1], "18", "-o", str(second)]) == EXIT_OK
        means = [
            json.loads(path.read_text(encoding="utf-8"))["result"]["estimators"][1]["mean"]
            for path in (first, second)
        ]
        assert means[0] != means[1]
