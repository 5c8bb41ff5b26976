"""
Artifacts — report.json and the CSV series, written atomically.

Every file goes to a temporary sibling first and is moved into place
with ``os.replace``. Floats are written with ``repr`` so reruns with the
same seed produce byte-identical CSV files.
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pyda_models.models import ExperimentConfig, MeasureRow, ScanMode, StepRecord

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ("i", "N_i", "res_norm", "sol_norm", "path", "seconds")
MEASURE_COLUMNS = ("gamma", "rejected_fraction", "N", "epsilon", "rho")
ORDER_COLUMNS = ("degree", "epsilon", "order", "usable", "converged", "steps")
BENCH_COLUMNS = ("instance", "dim", "n_singular", "n_clusters", "path", "rel_error", "neumann_terms", "seconds")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def atomic_write(path: Path, content: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s", path)
    return path


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return atomic_write(path, buf.getvalue())


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    return atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj: Any) -> Any:
    if hasattr(obj, "item"):
        return obj.item()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(value: Any) -> Any:
    """Replace NaN/inf by None so report.json stays strict JSON."""
    if isinstance(value, float) and (value != value or value in (float("inf"), float("-inf"))):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


class ArtifactWriter:
    """Writes the files of one experiment into its output directory."""

    def __init__(self, output_dir: Path, cfg: ExperimentConfig, version: str):
        self.output_dir = Path(output_dir)
        self.cfg = cfg
        self.version = version
        self.written: List[Path] = []

    def _target(self, name: str) -> Path:
        return self.output_dir / name

    def report(self, result: Dict[str, Any], timing: Optional[Dict[str, float]] = None) -> Path:
        payload = {
            "version": self.version,
            "experiment": self.cfg.experiment.value,
            "config": self.cfg.model_dump(mode="json"),
            "result": _clean(result),
            "timing": timing or {},
        }
        path = write_json(self._target("report.json"), payload)
        self.written.append(path)
        return path

    def history(self, records: Sequence[StepRecord]) -> Path:
        timings = self.cfg.history_timings
        rows = [
            (r.i, r.N, r.res_norm, r.sol_norm, r.path, r.seconds if timings else None)
            for r in records
        ]
        path = write_csv(self._target("history.csv"), HISTORY_COLUMNS, rows)
        self.written.append(path)
        return path

    def measure(self, rows: Sequence[MeasureRow], mode: ScanMode = ScanMode.MELNIKOV) -> Path:
        columns = ("gamma1",) + MEASURE_COLUMNS[1:] if mode == ScanMode.OPERATOR else MEASURE_COLUMNS
        data = [(r.gamma, r.rejected_fraction, r.N, r.epsilon, r.rho) for r in rows]
        path = write_csv(self._target("measure.csv"), columns, data)
        self.written.append(path)
        return path

    def order(self, rows: Sequence[Sequence[Any]]) -> Path:
        path = write_csv(self._target("order.csv"), ORDER_COLUMNS, rows)
        self.written.append(path)
        return path

    def bench(self, rows: Sequence[Sequence[Any]]) -> Path:
        timings = self.cfg.history_timings
        data = [tuple(r[:-1]) + ((r[-1] if timings else None),) for r in rows]
        path = write_csv(self._target("bench.csv"), BENCH_COLUMNS, data)
        self.written.append(path)
        return path
