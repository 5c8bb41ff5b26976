"""
Test suite for the command-line layer: config loading and error rendering,
runtime settings, artifact files and the run/validate/scan commands.

Run with:
    pytest tests/test_cli.py -v
    pytest tests/test_cli.py --cov=src/cli --cov-report=html
"""

import csv
import json
import sys
import os
import textwrap

import pytest

# Ensure project root is on path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pyda_models.models import ExperimentConfig, ExperimentKind, WeightMode
from src.cli import CLIGateway
from src.cli.artifacts import HISTORY_COLUMNS, atomic_write, write_csv
from src.cli.config_loader import apply_overrides, key_lines, parse_config
from src.core.errors import ConfigurationError
from src.core.settings import RuntimeSettings

SOLVE_YAML = """\
experiment: solve
problem:
  rho: 2
  epsilon: 0.001
"""

SCAN_YAML = """\
experiment: measure_scan
seed: 7
problem:
  a: null
  epsilon: 0.01
params:
  tau: 0.5
scan:
  grid_count: 200
  N: 20
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(path)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# ======================================================================
# Fixtures
# ======================================================================

@pytest.fixture
def cli():
    return CLIGateway()


@pytest.fixture
def solve_config(tmp_path):
    return _write(tmp_path, "solve.yaml", SOLVE_YAML)


@pytest.fixture
def scan_config(tmp_path):
    return _write(tmp_path, "scan.yaml", SCAN_YAML)


# ======================================================================
# Config loading
# ======================================================================

class TestConfigLoader:
    def test_key_lines(self):
        lines = key_lines(SOLVE_YAML)
        assert lines[("experiment",)] == 1
        assert lines[("problem", "epsilon")] == 4

    def test_parse(self):
        cfg = parse_config(SOLVE_YAML)
        assert cfg.experiment == ExperimentKind.SOLVE
        assert cfg.problem.epsilon == pytest.approx(1e-3)

    def test_unknown_key_names_key_and_line(self):
        text = "experiment: solve\nparams:\n  gama: 0.3\n"
        with pytest.raises(ConfigurationError) as exc:
            parse_config(text)
        assert exc.value.key == "params.gama"
        assert exc.value.line == 3
        assert "unknown key 'gama'" in str(exc.value)

    def test_violated_inequality(self):
        text = "experiment: solve\nparams:\n  sigma_bar: 0.2\n  sigma: 0.1\n"
        with pytest.raises(ConfigurationError) as exc:
            parse_config(text)
        assert "sigma_bar < sigma" in str(exc.value)
        assert exc.value.line == 2

    def test_missing_required_a(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_config("experiment: solve\nproblem:\n  a: null\n")
        assert "problem.a" in str(exc.value)

    def test_malformed_yaml(self):
        with pytest.raises(ConfigurationError):
            parse_config("experiment: [solve\n")

    def test_non_mapping(self):
        with pytest.raises(ConfigurationError):
            parse_config("- solve\n")

    def test_overrides_revalidate(self):
        cfg = apply_overrides(parse_config(SOLVE_YAML), seed=9, output_dir="elsewhere",
                              weight_mode=WeightMode.POLYNOMIAL)
        assert cfg.seed == 9
        assert cfg.output_dir == "elsewhere"
        assert cfg.problem.basis.weight_mode == WeightMode.POLYNOMIAL

    def test_example_configs_validate(self):
        root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        folder = os.path.join(root, "config")
        names = sorted(n for n in os.listdir(folder) if n.endswith(".example.yaml"))
        assert names
        for name in names:
            with open(os.path.join(folder, name), encoding="utf-8") as fh:
                assert isinstance(parse_config(fh.read(), name), ExperimentConfig)


class TestRuntimeSettings:
    def test_flag_wins(self):
        assert RuntimeSettings(threads=3).resolve_threads(5) == 5
        assert RuntimeSettings(threads=3).resolve_threads(None) == 3

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("NMSPECTRAL_THREADS", "2")
        assert RuntimeSettings().threads == 2

    def test_cpu_default(self):
        assert RuntimeSettings(threads=None).resolve_threads() >= 1


# ======================================================================
# Artifacts
# ======================================================================

class TestArtifacts:
    def test_csv_cells(self, tmp_path):
        path = write_csv(tmp_path / "x.csv", ("a", "b", "c"), [(0.1, None, True)])
        assert path.read_text(encoding="utf-8") == "a,b,c\n0.1,,true\n"

    def test_atomic_write_leaves_no_temporaries(self, tmp_path):
        atomic_write(tmp_path / "sub" / "f.txt", "hello")
        assert sorted(p.name for p in (tmp_path / "sub").iterdir()) == ["f.txt"]


# ======================================================================
# Commands
# ======================================================================

class TestValidateCommand:
    def test_valid(self, cli, solve_config, capsys):
        assert cli.run(["validate", solve_config]) == 0
        out = capsys.readouterr().out
        assert out.startswith("OK")
        assert '"kappa_bound"' in out

    def test_unknown_key(self, cli, tmp_path, capsys):
        path = _write(tmp_path, "bad.yaml", "experiment: solve\nparams:\n  gama: 0.3\n")
        assert cli.run(["validate", path]) == 1
        err = capsys.readouterr().err
        assert "params.gama (line 3)" in err

    def test_kappa_below_bound(self, cli, tmp_path, capsys):
        path = _write(tmp_path, "kappa.yaml", "experiment: solve\ndivisors:\n  enforce_kappa_bound: true\n  kappa: 1.0\n")
        assert cli.run(["validate", path]) == 1
        assert "required bound" in capsys.readouterr().err

    def test_missing_file(self, cli, tmp_path, capsys):
        assert cli.run(["validate", str(tmp_path / "nope.yaml")]) == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_no_command(self, cli):
        assert cli.run([]) == 1


class TestRunCommand:
    def test_solve_writes_artifacts(self, cli, solve_config, tmp_path):
        out = tmp_path / "out"
        assert cli.run(["run", solve_config, "--output-dir", str(out), "--threads", "1"]) == 0
        rows = _rows(out / "history.csv")
        assert tuple(rows[0]) == HISTORY_COLUMNS
        residuals = [float(r[2]) for r in rows[1:]]
        assert all(b < a for a, b in zip(residuals, residuals[1:]))
        assert all(r[5] == "" for r in rows[1:])
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert set(report) == {"version", "experiment", "config", "result", "timing"}
        assert report["result"]["converged"] is True
        assert report["config"]["problem"]["epsilon"] == pytest.approx(1e-3)

    def test_solve_is_reproducible(self, cli, solve_config, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert cli.run(["run", solve_config, "--output-dir", str(first)]) == 0
        assert cli.run(["run", solve_config, "--output-dir", str(second)]) == 0
        assert (first / "history.csv").read_bytes() == (second / "history.csv").read_bytes()

    def test_step_timings(self, cli, tmp_path):
        default_out, timed_out = tmp_path / "default", tmp_path / "timed"
        assert cli.run(["run", _write(tmp_path, "solve.yaml", SOLVE_YAML), "--output-dir", str(default_out)]) == 0
        rows = _rows(default_out / "history.csv")
        report = json.loads((default_out / "report.json").read_text(encoding="utf-8"))
        steps = report["timing"]["step_seconds"]
        assert len(steps) == len(rows) - 1
        assert all(s >= 0.0 for s in steps)

        timed = _write(tmp_path, "timed.yaml", SOLVE_YAML + "history_timings: true\n")
        assert cli.run(["run", timed, "--output-dir", str(timed_out)]) == 0
        assert all(float(r[5]) >= 0.0 for r in _rows(timed_out / "history.csv")[1:])

    def test_unconverged_run_exit_code(self, cli, tmp_path):
        path = _write(tmp_path, "short.yaml", SOLVE_YAML + "params:\n  max_steps: 1\n  stop_tol: 1.0e-30\n")
        assert cli.run(["run", path, "--output-dir", str(tmp_path / "out")]) == 2

    def test_uniqueness(self, cli, tmp_path):
        text = "experiment: uniqueness\nseed: 11\nuniqueness:\n  k_perturbations: 2\n  magnitude: 1.0e-3\n"
        path = _write(tmp_path, "uniq.yaml", text)
        out = tmp_path / "out"
        assert cli.run(["run", path, "--output-dir", str(out), "--threads", "2"]) == 0
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["result"]["probe"]["max_distance"] <= 1e-8

    def test_solver_bench(self, cli, tmp_path):
        text = "experiment: solver_bench\nseed: 3\nproblem:\n  a: null\nbench:\n  instances: 4\n  N_max: 8\n"
        path = _write(tmp_path, "bench.yaml", text)
        out = tmp_path / "out"
        assert cli.run(["run", path, "--output-dir", str(out)]) in (0, 2)
        rows = _rows(out / "bench.csv")
        assert len(rows) == 5
        assert [int(r[0]) for r in rows[1:]] == [0, 1, 2, 3]


class TestScanCommand:
    def test_melnikov_scan(self, cli, scan_config, tmp_path):
        out = tmp_path / "out"
        assert cli.run(["scan", scan_config, "--output-dir", str(out)]) == 0
        rows = _rows(out / "measure.csv")
        assert rows[0] == ["gamma", "rejected_fraction", "N", "epsilon", "rho"]
        fractions = [float(r[1]) for r in rows[1:]]
        assert len(fractions) == 5
        assert fractions == sorted(fractions)
        assert all(0.0 <= f <= 1.0 for f in fractions)

    def test_operator_scan_header(self, cli, tmp_path):
        path = _write(tmp_path, "op.yaml", SCAN_YAML + "  mode: operator\n")
        out = tmp_path / "out"
        assert cli.run(["scan", path, "--output-dir", str(out)]) == 0
        assert _rows(out / "measure.csv")[0][0] == "gamma1"

    def test_scan_needs_scan_config(self, cli, solve_config, capsys):
        assert cli.run(["scan", solve_config]) == 1
        assert "measure_scan" in capsys.readouterr().err
