"""Renderers for the five figure kinds emitted by the experiments CLI.

The contract with the data producer is purely the CSV schema: renderers
look up column names, parse text cells, and never import the chain
library.  Empty cells mean "not set for this row"; each figure kind
declares the columns it needs and fails fast when they are absent.
"""

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cwplots"  # deterministic SVG ids

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """The input CSV does not match the figure kind's expected columns."""

    exit_code = 2


KINDS = ("fig1", "fig2", "cutoff-profile", "gap-scaling", "window-scaling")

# columns each kind reads; they must appear in every input file's header
REQUIRED = {
    "fig1": ("label", "s", "pi"),
    "fig2": ("t", "s", "label", "threshold"),
    "cutoff-profile": ("n", "t", "d_tv"),
    "gap-scaling": ("n", "delta", "gap"),
    "window-scaling": ("n", "delta", "epsilon", "t_mix"),
}


@dataclass(frozen=True)
class PlotJob:
    """One figure to render.

    inputs     one CSV path or a tuple of paths (rows are concatenated)
    output     image path; the .png and .svg siblings are both written
    logx/logy  None keeps the kind's default axis scale
    normalize  scale time axes: cutoff curves by the empirical quarter-
               mixing time, scaling charts by n/delta from the rows
    """

    kind: str
    inputs: tuple
    output: str
    logx: bool = None
    logy: bool = None
    normalize: bool = True
    title: str = None


def _read_rows(path, required):
    if not os.path.exists(path):
        raise SchemaError(f"{path}: no such file")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV; expected columns "
                              + ", ".join(required))
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing columns " + ", ".join(missing))
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _num(row, col):
    cell = row.get(col)
    return float(cell) if cell not in (None, "") else None


# ---------------------------------------------------------------------------
# fig1: overlaid stationary laws

_FIG1_STYLE = {
    "ordinary-sub": dict(color="tab:blue", lw=2.2, ls="-"),
    "ordinary-super": dict(color="tab:green", lw=1.4, ls="--"),
    "censored-shifted": dict(color="tab:red", lw=0.0, marker=".", ms=4.0),
}


def _render_fig1(rows, job, ax):
    labels = []
    for row in rows:
        lab = row.get("label") or ""
        if lab and lab not in labels:
            labels.append(lab)
    if not labels:
        raise SchemaError("fig1 input has no labeled series (label column empty)")
    for lab in labels:
        pts = sorted((_num(r, "s"), _num(r, "pi")) for r in rows
                     if (r.get("label") or "") == lab
                     and _num(r, "s") is not None and _num(r, "pi") is not None)
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        ax.plot(xs, ys, label=lab, **_FIG1_STYLE.get(lab, {}))
    ax.set_xlabel("magnetization")
    ax.set_ylabel("stationary probability")
    ax.legend()


# ---------------------------------------------------------------------------
# fig2: one trajectory with its threshold crossings marked

def _fig2_crossings(rows):
    """Labeled crossing rows as (t, label, threshold), sorted by time."""
    out = [(_num(r, "t"), r.get("label") or "", _num(r, "threshold"))
           for r in rows if (r.get("label") or "")]
    out.sort()
    return out


def _render_fig2(rows, job, ax):
    traj = sorted((_num(r, "t"), _num(r, "s")) for r in rows
                  if _num(r, "t") is not None and _num(r, "s") is not None
                  and not (r.get("label") or ""))
    if not traj:
        raise SchemaError("fig2 input has no trajectory rows (t, s populated)")
    ts = np.array([p[0] for p in traj])
    ss = np.array([p[1] for p in traj])
    ax.plot(ts, ss, color="tab:blue", lw=1.0)
    colors = ("tab:orange", "tab:green", "tab:red", "tab:purple")
    for i, (t, lab, thr) in enumerate(_fig2_crossings(rows)):
        c = colors[i % len(colors)]
        ax.axvline(t, color=c, ls="--", lw=1.0)
        if thr is not None:
            ax.axhline(thr, color=c, ls=":", lw=0.8, alpha=0.6)
            ax.plot([t], [thr], marker="o", ms=5, color=c)
        ax.annotate(f"{i + 1}: {lab}", xy=(t, 0.97 - 0.07 * i),
                    xycoords=("data", "axes fraction"),
                    color=c, fontsize=8, ha="left",
                    xytext=(4, 0), textcoords="offset points")
    ax.set_xlabel("t (steps)")
    ax.set_ylabel("magnetization")


# ---------------------------------------------------------------------------
# cutoff-profile: TV distance curves across n

def _quarter_time(ts, ds):
    """First time the profile drops through 1/4, linearly interpolated;
    None when the curve never gets that low."""
    below = np.nonzero(ds <= 0.25)[0]
    if below.size == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(ts[0])
    t0, t1, d0, d1 = ts[k - 1], ts[k], ds[k - 1], ds[k]
    if d0 == d1:
        return float(t1)
    return float(t0 + (d0 - 0.25) * (t1 - t0) / (d0 - d1))


def _render_cutoff(rows, job, ax):
    by_n = {}
    for r in rows:
        d = _num(r, "d_tv")
        if d is None:
            continue
        by_n.setdefault(int(_num(r, "n")), []).append((_num(r, "t"), d))
    if not by_n:
        raise SchemaError("cutoff-profile input has no rows with n, t, d_tv set")
    for n in sorted(by_n):
        pts = sorted(by_n[n])
        ts = np.array([p[0] for p in pts])
        ds = np.array([p[1] for p in pts])
        if job.normalize:
            tq = _quarter_time(ts, ds)
            if tq is None or tq <= 0.0:
                raise SchemaError(f"cutoff-profile: curve for n={n} never falls "
                                  "below 1/4, cannot scale by the quarter-mixing "
                                  "time (pass normalize=False)")
            ts = ts / tq
        ax.plot(ts, ds, lw=1.4, label=f"n = {n}")
    ax.axhline(0.25, color="0.5", ls=":", lw=0.9)
    if job.normalize:
        ax.axvline(1.0, color="0.5", ls=":", lw=0.9)
        ax.set_xlabel("t / t_mix(1/4)  (dimensionless)")
        ax.set_xlim(0.0, 2.0)
    else:
        ax.set_xlabel("t (steps)")
    ax.set_ylabel("total-variation distance")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()


# ---------------------------------------------------------------------------
# gap-scaling: spectral gap against n

def _render_gap(rows, job, ax):
    pts = sorted(((_num(r, "n"), _num(r, "delta"), _num(r, "gap"),
                   _num(r, "dirichlet_upper"))
                  for r in rows if _num(r, "gap") is not None),
                 key=lambda p: p[0])
    if not pts:
        raise SchemaError("gap-scaling input has no rows with n, delta, gap set")
    ns = np.array([p[0] for p in pts])
    deltas = np.array([p[1] for p in pts])
    gaps = np.array([p[2] for p in pts])
    if job.normalize:
        ax.plot(ns, gaps * ns / deltas, marker="o", color="tab:blue",
                label=r"gap $\cdot\ n/\delta$")
        upper = [p[3] for p in pts]
        if all(u is not None for u in upper):
            ax.plot(ns, np.array(upper) * ns / deltas, marker="s", ls="--",
                    color="tab:orange", label=r"Dirichlet upper $\cdot\ n/\delta$")
        ax.set_ylabel("scaled gap  (dimensionless)")
        ax.set_ylim(bottom=0.0)
    else:
        ax.plot(ns, gaps, marker="o", color="tab:blue", label="spectral gap")
        ax.set_ylabel("spectral gap  (1/steps)")
        ax.set_yscale("log")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n (spins)")
    ax.legend()


# ---------------------------------------------------------------------------
# window-scaling: mixing window against n

def _render_window(rows, job, ax):
    by_n = {}
    for r in rows:
        tm = _num(r, "t_mix")
        if tm is None:
            continue
        n = int(_num(r, "n"))
        by_n.setdefault(n, {})[_num(r, "epsilon")] = (tm, _num(r, "delta"))
    if not by_n:
        raise SchemaError("window-scaling input has no rows with n, epsilon, "
                          "t_mix set")
    ns = sorted(by_n)
    eps_levels = sorted({e for d in by_n.values() for e in d})
    if len(eps_levels) < 2:
        raise SchemaError("window-scaling needs at least two epsilon levels")
    unit = "steps/(n/delta)" if job.normalize else "steps"

    def scale(n, value):
        return value * by_n[n][min(by_n[n])][1] / n if job.normalize else value

    for eps in eps_levels:
        xs = [n for n in ns if eps in by_n[n]]
        ys = [scale(n, by_n[n][eps][0]) for n in xs]
        ax.plot(xs, ys, marker=".", lw=0.9, alpha=0.7,
                label=f"t_mix({eps:g})")
    windows = []
    for n in ns:
        lo, hi = min(by_n[n]), max(by_n[n])
        if lo == hi:
            raise SchemaError(f"window-scaling: n={n} has a single epsilon level")
        windows.append(scale(n, by_n[n][lo][0] - by_n[n][hi][0]))
    ax.plot(ns, windows, marker="o", lw=2.0, color="black",
            label=f"window t_mix({min(eps_levels):g}) - t_mix({max(eps_levels):g})")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n (spins)")
    ax.set_ylabel(f"time  ({unit})")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize=8)


_RENDERERS = {
    "fig1": _render_fig1,
    "fig2": _render_fig2,
    "cutoff-profile": _render_cutoff,
    "gap-scaling": _render_gap,
    "window-scaling": _render_window,
}


def render(job):
    """Render one job; returns the written (png_path, svg_path).

    Inputs are opened read-only and the render is idempotent: repeating
    a job rewrites byte-identical images.
    """
    if job.kind not in _RENDERERS:
        raise SchemaError(f"unknown figure kind {job.kind!r}; choose from "
                          + ", ".join(KINDS))
    paths = (job.inputs,) if isinstance(job.inputs, (str, os.PathLike)) else tuple(job.inputs)
    if not paths:
        raise SchemaError("no input CSVs given")
    rows = []
    for path in paths:
        rows.extend(_read_rows(path, REQUIRED[job.kind]))

    base, ext = os.path.splitext(str(job.output))
    if ext.lower() not in ("", ".png", ".svg"):
        raise SchemaError(f"unsupported output extension {ext!r}; use .png or .svg")

    fig, ax = plt.subplots(figsize=(7.0, 4.6), dpi=150)
    try:
        _RENDERERS[job.kind](rows, job, ax)
        if job.logx is not None:
            ax.set_xscale("log" if job.logx else "linear")
        if job.logy is not None:
            ax.set_yscale("log" if job.logy else "linear")
        if job.title:
            ax.set_title(job.title)
        fig.tight_layout()
        written = []
        for suffix in (".png", ".svg"):
            out = base + suffix
            kwargs = {"metadata": {"Date": None}} if suffix == ".svg" else {}
            fig.savefig(out, **kwargs)
            written.append(out)
        return tuple(written)
    finally:
        plt.close(fig)
