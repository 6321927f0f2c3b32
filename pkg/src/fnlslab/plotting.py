"""Matplotlib figures written next to the CSV/JSON outputs (Agg backend, no display)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# keep PNG bytes reproducible across runs
_META = {"Software": None}


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def _slice(f):
    g = f.grid
    v = np.abs(f.values)
    if g.d == 2:
        v = v[:, g.N // 2]
    return g.x, v


def profile(f, path, title="ground state"):
    x, v = _slice(f)
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.4))
    ax[0].plot(x, v, lw=1.2)
    ax[0].set_xlabel("x")
    ax[0].set_ylabel("|Q|")
    ax[0].set_title(title)
    ax[1].semilogy(x[x > 0], np.maximum(v[x > 0], 1e-16), lw=1.2)
    ax[1].set_xlabel("x")
    ax[1].set_title("tail")
    return _finish(fig, path)


def series(ts, path, cols=("l2", "hs", "energy")):
    t = ts.col("t")
    fig, ax = plt.subplots(1, len(cols), figsize=(3.3 * len(cols), 3.2))
    for a, c in zip(np.atleast_1d(ax), cols):
        y = ts.col(c)
        a.plot(t, y, lw=1.2)
        a.set_xlabel("t")
        a.set_title(c)
    return _finish(fig, path)


def blowup(ts, fit, path):
    t, hs = ts.col("t"), ts.col("hs")
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.4))
    ax[0].plot(t, hs, lw=1.2)
    ax[0].set_xlabel("t")
    ax[0].set_ylabel("||u||_s")
    if fit is not None:
        T, p, _, c = fit
        tt = np.linspace(t[0], t[-1], 200)
        ax[0].axvline(T, color="0.5", ls="--", lw=0.8)
        m = T - t > 0
        ax[1].loglog(T - t[m], hs[m], ".", ms=3, label="run")
        ax[1].loglog(T - tt, np.exp(c) * (T - tt) ** (-p), lw=1, label=f"p = {p:.3f}")
        ax[1].set_xlabel("T - t")
        ax[1].legend(frameon=False)
    return _finish(fig, path)


def virial(details, path):
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.4))
    ax[0].plot(details["t"], details["dM"], lw=1.2, label="dM/dt")
    ax[0].plot(details["t"], details["rhs"], "--", lw=1.2, label="identity")
    ax[0].legend(frameon=False)
    ax[0].set_xlabel("t")
    ax[1].semilogy(details["t"], np.maximum(details["rel"], 1e-16), lw=1.2)
    ax[1].set_xlabel("t")
    ax[1].set_title("relative defect")
    return _finish(fig, path)


def concentration(recs, S2, path):
    t = [r.t for r in recs]
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.4))
    ax[0].plot(t, [r.sobolev_value for r in recs], "o-", ms=3, lw=1)
    ax[0].axhline(S2, color="0.5", ls="--", lw=0.8, label="S_gs^2")
    ax[0].legend(frameon=False)
    ax[0].set_xlabel("t")
    ax[0].set_title("windowed H^sc mass")
    ax[1].plot(t, [r.a for r in recs], lw=1.2)
    ax[1].set_xlabel("t")
    ax[1].set_title("window radius")
    return _finish(fig, path)


def profiles(truth, found, path):
    fig, ax = plt.subplots(1, max(len(found), 1), figsize=(4.2 * max(len(found), 1), 3.2), squeeze=False)
    for j, V in enumerate(found):
        x, v = _slice(V)
        ax[0, j].plot(x, v, lw=1.2, label="extracted")
        if j < len(truth):
            ax[0, j].plot(*_slice(truth[j]), "--", lw=1, label="planted")
        ax[0, j].set_xlim(-12, 12)
        ax[0, j].set_title(f"profile {j}")
        ax[0, j].legend(frameon=False)
    return _finish(fig, path)


def alignment(u, rebuilt, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(*_slice(u), lw=1.2, label="u")
    ax.plot(*_slice(rebuilt), "--", lw=1.2, label="rebuilt from (theta, x0, lam)")
    ax.legend(frameon=False)
    ax.set_xlabel("x")
    return _finish(fig, path)


def scatter_margins(rhs, margin, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(rhs, margin / rhs, ".", ms=2)
    ax.set_xscale("log")
    ax.set_xlabel("GN right-hand side")
    ax.set_ylabel("margin / RHS")
    return _finish(fig, path)
