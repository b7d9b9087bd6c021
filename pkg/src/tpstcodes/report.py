"""Error-rate figures written next to campaign CSVs."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# value column to plot for each CSV layout
VALUE_COLUMNS = ("fer", "estimate")


def read_curve(path: str | Path) -> dict[str, list[tuple[float, float]]]:
    """Curves from a CSV with ``snr_db`` and ``fer`` or ``estimate``, split by ``l_max`` if present."""
    curves: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        value = next((c for c in VALUE_COLUMNS if c in cols), None)
        if "snr_db" not in cols or value is None:
            raise ValueError(f"{path}: need an snr_db column and one of {VALUE_COLUMNS}")
        for row in reader:
            key = f"l={row['l_max']}" if "l_max" in row and row["l_max"] not in ("", None) else ""
            curves.setdefault(key, []).append((float(row["snr_db"]), float(row[value])))
    return {k: sorted(v) for k, v in curves.items()}


def plot_error_rates(
    csv_path: str | Path,
    png_path: str | Path | None = None,
    references: Sequence[dict] = (),
    title: str | None = None,
) -> Path:
    """Semilog error-rate plot of a campaign CSV, with optional reference overlays.

    ``references`` holds ``{"label": ..., "path": ...}`` entries pointing at
    user-supplied CSVs in the same layout. Zero estimates are left off the log axis.
    """
    csv_path = Path(csv_path)
    png_path = csv_path.with_suffix(".png") if png_path is None else Path(png_path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    _draw(ax, read_curve(csv_path), csv_path.stem, "o-")
    for ref in references:
        _draw(ax, read_curve(ref["path"]), ref["label"], "--")
    ax.set_yscale("log")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("error rate")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    if ax.has_data():
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def _draw(ax, curves: dict, label: str, style: str) -> None:
    for key, pts in curves.items():
        pts = _positive(pts)
        if pts:
            x, y = zip(*pts)
            ax.plot(x, y, style, label=f"{label} {key}".strip(), markersize=4)


def _positive(pts: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    return [(s, v) for s, v in pts if v > 0]
