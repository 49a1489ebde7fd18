"""CSV / JSON / SVG emitters.  Everything written here is deterministic for a
fixed input: numbers use 12 significant digits and SVGs carry no timestamps."""

from __future__ import annotations

import csv
import json
import math

import numpy as np


def fmt(x):
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.12g}"


def spectrum_header(k):
    alphas = range(-k, k + 1)
    return ["E", "T", "R", "status"] + [f"T_{a}" for a in alphas] + [f"R_{a}" for a in alphas]


def write_spectrum_csv(path, rows, k=3):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(spectrum_header(k))
        for r in rows:
            alphas = range(-k, k + 1)
            w.writerow(
                [fmt(r.energy), fmt(r.T), fmt(r.R), r.status]
                + [fmt(r.channel(a, "T")) for a in alphas]
                + [fmt(r.channel(a, "R")) for a in alphas]
            )


def write_snapshots_csv(path, trajectory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "n", "re_c", "im_c"])
        for snap in trajectory.snapshots:
            t = fmt(snap.t)
            for n, c in zip(snap.sites, snap.c):
                w.writerow([t, int(n), fmt(c.real), fmt(c.imag)])


def write_norm_csv(path, trajectory):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "P"])
        for t, p in zip(trajectory.times, trajectory.norms):
            w.writerow([fmt(t), fmt(p)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "floquet-invisibility"
    return plt


def plot_spectrum_svg(path, rows, ceiling=10.0, logy=False, title=""):
    plt = _pyplot()
    E = np.array([r.energy for r in rows])
    T = np.clip(np.array([r.T for r in rows]), None, ceiling)
    R = np.clip(np.array([r.R for r in rows]), None, ceiling)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(E, T, "-", lw=1.2, label="T")
    ax.plot(E, R, "--", lw=1.2, label="R")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(r"$E/\kappa$")
    ax.set_ylabel("T, R")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_spacetime_svg(path, trajectory, title=""):
    plt = _pyplot()
    amp = np.array([np.abs(s.c) for s in trajectory.snapshots])
    sites = trajectory.snapshots[0].sites
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(
        amp,
        aspect="auto",
        origin="lower",
        extent=[sites[0], sites[-1], trajectory.times[0], trajectory.times[-1]],
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label=r"$|c_n|$")
    ax.set_xlabel("n")
    ax.set_ylabel(r"$\kappa t$")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
