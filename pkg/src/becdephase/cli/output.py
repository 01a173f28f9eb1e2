"""
Persistence: per-curve CSV, combined JSON, SVG figures and the run manifest.

Everything except the manifest's ``wall_clock_seconds`` is a pure function
of the configuration, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from pathlib import Path

import numpy as np

from .. import __version__
from ..coupling import mean_field_shift
from ..params import derive_scales, to_reduced_units
from .experiments import ExperimentResult, Series

CSV_ERROR_COLUMN = "abs_error_estimate"


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip a double."""
    return format(float(x), ".17g")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_text(series: Series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([series.x_name, "value", CSV_ERROR_COLUMN])
    for x, v, e in zip(series.x, series.values, series.errors):
        w.writerow([fmt(x), fmt(v), fmt(e)])
    return buf.getvalue()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def results_document(result: ExperimentResult) -> dict:
    cfg = result.config
    return {
        "kind": cfg.kind,
        "figure": cfg.figure,
        "summary": result.summary,
        "extras": result.extras,
        "curves": {s.label: {"x_name": s.x_name, "x": s.x, "values": s.values, "errors": s.errors}
                   for s in result.series},
    }


def error_summary(series: Series, rel_tol: float) -> dict:
    v, e = np.abs(series.values), series.errors
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(v > 0, e / v, 0.0)
    return {
        "n_points": int(v.size),
        "max_abs_error": float(np.max(e)) if e.size else 0.0,
        "max_rel_error": float(np.max(rel)) if e.size else 0.0,
        # rows whose estimate exceeds rel_tol*|value|; these sit at rounding level
        "rows_above_rel_tol": int(np.sum(e > rel_tol * v)),
    }


def manifest_document(result: ExperimentResult, files: dict[str, str], wall_clock: float) -> dict:
    cfg = result.config
    p = cfg.params
    s = derive_scales(p)
    import matplotlib
    import scipy

    return {
        "code_version": __version__,
        "environment": {"python": platform.python_version(), "numpy": np.__version__,
                        "scipy": scipy.__version__, "matplotlib": matplotlib.__version__},
        "config": cfg.to_text(),
        "params_si": p.to_dict(),
        "params_reduced": to_reduced_units(p, s).__dict__,
        "scales": s.to_dict(),
        "mean_field_shift_J": mean_field_shift(p.n0, s.g_AB),
        "curves": {ser.label: error_summary(ser, cfg.rel_tol) for ser in result.series},
        "files": files,
        "wall_clock_seconds": wall_clock,
    }


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_result(result: ExperimentResult, out: Path, wall_clock: float, plots: bool = True) -> dict[str, str]:
    """Write every artifact of one run below ``out``; returns ``{relative path: sha256}``."""
    out = Path(out)
    files: dict[str, str] = {}
    labels = [s.label for s in result.series]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate series labels: {labels}")
    for s in result.series:
        text = csv_text(s)
        _write(out / "curves" / f"{s.label}.csv", text)
        files[f"curves/{s.label}.csv"] = sha256(text)
    text = dumps(results_document(result))
    _write(out / "results.json", text)
    files["results.json"] = sha256(text)
    _write(out / "config.txt", result.config.to_text())
    files["config.txt"] = sha256(result.config.to_text())
    if plots and result.panels:
        name = (result.config.figure or result.config.kind) + ".svg"
        svg = render_svg(result)
        _write(out / name, svg)
        files[name] = sha256(svg)
    _write(out / "manifest.json", dumps(manifest_document(result, files, wall_clock)))
    return files


# -- plotting ------------------------------------------------------------------

SVG_SALT = "becdephase"


def render_svg(result: ExperimentResult) -> str:
    """Self-contained SVG (glyphs as paths, no external assets), deterministic."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    main_panels = [p for p in result.panels if p.inset_of is None]
    insets = {p.inset_of: p for p in result.panels if p.inset_of is not None}
    n = len(main_panels)
    ncols = 1 if n == 1 else 2
    nrows = math.ceil(n / ncols)
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path",
                                "path.simplify": False, "axes.grid": True, "grid.alpha": 0.3}):
        fig, axes = plt.subplots(nrows, ncols, figsize=(5.5 * ncols, 4.0 * nrows), squeeze=False)
        # column-major so that bath panels (condensate, free) sit side by side
        flat = [axes[r][c] for c in range(ncols) for r in range(nrows)] if nrows > 1 else list(axes[0])
        for ax, panel in zip(flat, main_panels):
            has_inset = panel.key in insets
            _draw(ax, panel, [s for s in result.series if panel.key in s.panels], legend=True,
                  legend_kw={"loc": "lower right", "bbox_to_anchor": (0.97, 0.38)} if has_inset else {})
            if has_inset:
                inset = insets[panel.key]
                sub = ax.inset_axes([0.55, 0.08, 0.4, 0.27])
                _draw(sub, inset, [s for s in result.series if inset.key in s.panels], legend=False)
                sub.tick_params(labelsize=6)
                sub.xaxis.get_offset_text().set_fontsize(6)
                sub.yaxis.get_offset_text().set_fontsize(6)
        for ax in flat[n:]:
            ax.set_visible(False)
        if result.config.title and n > 1:
            fig.suptitle(result.config.title)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def _draw(ax, panel, series, legend: bool, legend_kw=None):
    for s in series:
        x, y = s.x, s.values
        if panel.log_x:
            keep = x > 0
            x, y = x[keep], y[keep]
        if panel.log_y:
            keep = y > 0
            x, y = x[keep], y[keep]
        ax.plot(x, y, linestyle=s.style, label=s.legend or s.label, lw=1.2)
    if panel.log_x:
        ax.set_xscale("log")
    if panel.log_y:
        ax.set_yscale("log")
    if panel.title:
        ax.set_title(panel.title, fontsize=10)
    if panel.inset_of is None:
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel)
    if legend and series:
        ax.legend(fontsize=8, **(legend_kw or {}))
