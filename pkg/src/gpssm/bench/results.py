"""CSV / JSON emission of run results and the matching plot script."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable

from .config import ExperimentConfig
from .runner import RunResult

__all__ = ["CSV_COLUMNS", "CURVE_COLUMNS", "emit_results", "read_results_csv", "write_results_csv"]

CSV_COLUMNS = ["experiment", "matcher", "noise", "seed", "output_dim", "nmse", "mnll", "seconds", "max_inducing"]
CURVE_COLUMNS = ["experiment", "matcher", "noise", "seed", "curve", "x", "truth", "mean", "std"]

_CASTS = dict(noise=float, seed=int, output_dim=int, nmse=float, mnll=float, seconds=float, max_inducing=int)


def write_results_csv(results: Iterable[RunResult], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for res in results:
            for row in res.rows():
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def read_results_csv(path: Path) -> list[dict[str, Any]]:
    with open(path, newline="") as fh:
        return [{k: _CASTS.get(k, str)(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _write_curves(results: Iterable[RunResult], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for res in results:
            for name, curve in res.curves.items():
                for x, truth, mean, std in zip(curve["x"], curve["truth"], curve["mean"], curve["std"]):
                    writer.writerow([res.experiment, res.matcher, res.noise, res.seed, name, x, truth, mean, std])


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


_PLOT_SCRIPT = '''"""Render the curves and the nMSE summary written next to this script."""

import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
results_csv = here / {results!r}
curves_csv = here / "curves.csv"

scores = defaultdict(list)
with open(results_csv, newline="") as fh:
    for row in csv.DictReader(fh):
        scores[(row["matcher"], row["noise"], row["output_dim"])].append(float(row["nmse"]))
if scores:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    labels = sorted(scores)
    ax.boxplot([scores[k] for k in labels])
    ax.set_xticks(range(1, len(labels) + 1), [f"{{m}}\\nnoise={{n}}\\nout={{o}}" for m, n, o in labels], fontsize=7)
    ax.set_ylabel("nMSE")
    fig.tight_layout()
    fig.savefig(here / "nmse.png", dpi=150)

curves = defaultdict(lambda: defaultdict(list))
if curves_csv.exists():
    with open(curves_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["matcher"], row["noise"], row["seed"], row["curve"])
            for col in ("x", "truth", "mean", "std"):
                curves[key][col].append(float(row[col]))
seed = sys.argv[1] if len(sys.argv) > 1 else None
for (matcher, noise, run_seed, name), c in curves.items():
    if seed is not None and run_seed != seed:
        continue
    order = sorted(range(len(c["x"])), key=c["x"].__getitem__)
    x = [c["x"][i] for i in order]
    mean = [c["mean"][i] for i in order]
    lo = [c["mean"][i] - 2 * c["std"][i] for i in order]
    hi = [c["mean"][i] + 2 * c["std"][i] for i in order]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.fill_between(x, lo, hi, alpha=0.3, label="95% band")
    ax.plot(x, [c["truth"][i] for i in order], "k--", label="truth")
    ax.plot(x, mean, label="mean")
    ax.set_title(f"{{name}}: {{matcher}}, noise={{noise}}, seed={{run_seed}}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(here / f"{{name}}_{{matcher}}_{{noise}}_{{run_seed}}.png", dpi=150)
    plt.close(fig)
'''


def emit_results(results: list[RunResult], config: ExperimentConfig, out_dir: Path | None = None) -> dict[str, Path]:
    """Write the results CSV, a JSON document with the config, curves and the plot script."""
    out = Path(out_dir) if out_dir is not None else config.output.dir
    out.mkdir(parents=True, exist_ok=True)
    paths = dict(
        csv=out / config.output.csv,
        json=out / config.output.json_name,
        curves=out / "curves.csv",
        plot=out / config.output.plot,
    )
    write_results_csv(results, paths["csv"])
    _write_curves(results, paths["curves"])
    doc = dict(config=config.dump(), results=[r.to_dict() for r in results])
    paths["json"].write_text(json.dumps(_json_safe(doc), indent=1))
    paths["plot"].write_text(_PLOT_SCRIPT.format(results=config.output.csv))
    return paths
