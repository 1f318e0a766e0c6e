"""Grid samples of polynomials as CSV, with a matplotlib rendering beside them."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .oracle import Box


def sample_grid(func, box: Box, resolution: int | Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Points of a regular grid over ``box`` and ``func`` evaluated on them."""
    from .verify import grid_points

    pts = grid_points(box, resolution)
    return pts, np.asarray(func(pts), dtype=float)


def write_csv(path: str | Path, points: np.ndarray, values: np.ndarray) -> Path:
    path = Path(path)
    d = points.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(d)] + ["value"])
        for p, v in zip(points, values):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v))])
    return path


def read_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :-1], data[:, -1]


def render(path: str | Path, points: np.ndarray, values: np.ndarray,
           resolution: Sequence[int], title: str = "", marks=None) -> Path | None:
    """Save a PNG: a curve in 1-D, filled contours with the zero level in 2-D.

    Returns ``None`` for higher dimensions, where there is nothing sensible
    to draw.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    d = points.shape[1]
    if d > 2:
        return None
    fig, ax = plt.subplots(figsize=(5, 4.2))
    if d == 1:
        ax.plot(points[:, 0], values, lw=1.2)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel("x1")
    else:
        nx, ny = resolution
        # grid_points varies the last coordinate fastest
        X = points[:, 0].reshape(nx, ny)
        Y = points[:, 1].reshape(nx, ny)
        Z = values.reshape(nx, ny)
        finite = Z[np.isfinite(Z)]
        if finite.size:
            # values span many decades; arcsinh keeps the sign and compresses
            scale = float(np.median(np.abs(finite))) or 1.0
            W = np.arcsinh(np.nan_to_num(Z, nan=0.0) / scale)
            lim = float(np.abs(W).max()) or 1.0
            cs = ax.contourf(X, Y, W, levels=np.linspace(-lim, lim, 22), cmap="RdBu")
            fig.colorbar(cs, ax=ax, label=f"arcsinh(value / {scale:.3g})")
            if finite.min() < 0 < finite.max():
                ax.contour(X, Y, Z, levels=[0.0], colors="k", linewidths=1.0)
        if marks:
            m = np.asarray(marks, dtype=float)
            ax.plot(m[:, 0], m[:, 1], "k.", ms=6)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def emit(stem: str | Path, func, box: Box, resolution: int = 101, title: str = "",
         marks=None) -> dict:
    """Write ``<stem>.csv`` and ``<stem>.png``; returns the paths written."""
    stem = Path(stem)
    res = [int(resolution)] * box.dim
    pts, vals = sample_grid(func, box, res)
    out = {"csv": str(write_csv(stem.with_suffix(".csv"), pts, vals))}
    png = render(stem.with_suffix(".png"), pts, vals, res, title, marks)
    if png is not None:
        out["png"] = str(png)
    return out
