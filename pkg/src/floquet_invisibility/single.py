"""Floquet scattering off a single oscillating impurity at ``n = 0``.

Matching the Floquet ansatz at the impurity site gives a three-term recurrence
across channels,

    theta1 t_{a+1} + theta2 t_{a-1} - 2i kappa sin(q_a) t_a = -2i kappa sin(q) delta_{a,0},

with ``theta1, theta2 = V0 (1 +- delta) / 2`` and ``r_a = t_a - delta_{a,0}``.
The truncated system is tridiagonal and is solved with a pivoted banded LU.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import FloquetError, NoConvergence, SingularMatrix
from .model import (
    DEFAULT_TRUNCATION,
    ChannelSet,
    build_channel_set,
    channel_openings,
    momentum_from_energy,
)

PIVOT_TOL = 1e-14
CONVERGENCE_TOL = 1e-10
NEAR_SINGULAR_SIN = 1e-4
MAX_TRUNCATION = 640


@dataclass(frozen=True)
class Tridiagonal:
    """Banded storage: ``lower[k] = M[k+1, k]``, ``upper[k] = M[k, k+1]``."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def size(self):
        return len(self.diag)

    def dense(self):
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def matvec(self, x):
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y


def solve_tridiagonal(mat, rhs, pivot_tol=PIVOT_TOL, scale=1.0):
    """Solve ``mat @ x = rhs`` with LAPACK ``gttrf``/``gttrs`` (partial pivoting).

    Raises :class:`SingularMatrix` if any pivot of ``U`` is below
    ``pivot_tol * scale`` in modulus.
    """
    dl, d, du = (np.asarray(a, dtype=complex) for a in (mat.lower, mat.diag, mat.upper))
    dl, d, du, du2, ipiv, info = lapack.zgttrf(dl, d, du)
    pivots = np.abs(d)
    if info > 0 or pivots.min() < pivot_tol * scale:
        k = int(np.argmin(pivots))
        raise SingularMatrix(f"pivot {pivots[k]:.3e} at row {k} below {pivot_tol * scale:.1e}")
    x, info = lapack.zgttrs(dl, d, du, du2, ipiv, np.asarray(rhs, dtype=complex))
    if info != 0:
        raise SingularMatrix(f"gttrs failed with info={info}")
    return x


@dataclass(frozen=True)
class ScatteringAmplitudes:
    channels: ChannelSet
    t: np.ndarray
    r: np.ndarray
    near_singular: bool = False

    @property
    def alphas(self):
        return self.channels.alphas

    @property
    def energy(self):
        return self.channels.energy

    def _flux(self, amp):
        v = self.channels.group_velocity
        ratio = v / v[self.channels.index(0)]
        return np.where(self.channels.propagative, ratio * np.abs(amp) ** 2, np.nan)

    @property
    def T_per_channel(self):
        return self._flux(self.t)

    @property
    def R_per_channel(self):
        return self._flux(self.r)

    @property
    def T_total(self):
        return float(np.nansum(self.T_per_channel))

    @property
    def R_total(self):
        return float(np.nansum(self.R_per_channel))

    def amplitude(self, alpha, which="t"):
        arr = self.t if which == "t" else self.r
        return arr[self.channels.index(alpha)]

    def channel(self, alpha, which="T"):
        """Per-channel flux; NaN for evanescent or out-of-range ``alpha``."""
        if abs(alpha) > self.channels.truncation:
            return float("nan")
        arr = self.T_per_channel if which == "T" else self.R_per_channel
        return float(arr[self.channels.index(alpha)])


def _near_singular(channels):
    s = np.abs(channels.sin_q_alpha)
    return bool(np.any(channels.propagative & (s < NEAR_SINGULAR_SIN)))


def _require_single_site(model):
    if not model.is_single_site:
        raise ValueError("single-impurity solver needs a potential supported on n = 0 only")


def build_floquet_matrix(channels, model):
    _require_single_site(model)
    theta1, theta2 = model.impurity_couplings()
    n = len(channels.channels)
    diag = -2j * model.kappa * channels.sin_q_alpha
    return Tridiagonal(
        lower=np.full(n - 1, theta2, dtype=complex),
        diag=diag,
        upper=np.full(n - 1, theta1, dtype=complex),
    )


def _assemble(channels, t):
    r = t.copy()
    r[channels.index(0)] -= 1.0
    return ScatteringAmplitudes(channels, t, r, _near_singular(channels))


def _solve_fixed(q, model, N):
    channels = build_channel_set(q, model, N)
    mat = build_floquet_matrix(channels, model)
    rhs = np.zeros(mat.size, dtype=complex)
    rhs[channels.index(0)] = -2j * model.kappa * np.sin(q)
    scale = max(model.kappa, abs(model.v0))
    return _assemble(channels, solve_tridiagonal(mat, rhs, scale=scale))


def solve_amplitudes(q, model, N=DEFAULT_TRUNCATION, tol=CONVERGENCE_TOL, max_N=MAX_TRUNCATION):
    """Channel amplitudes at incidence momentum ``q``.

    The truncation is doubled until amplitudes on the common channel range
    change by less than ``tol``; the returned result is at the last ``N`` tried.
    """
    _require_single_site(model)
    coarse = _solve_fixed(q, model, N)
    while True:
        N2 = 2 * N
        if N2 > max_N:
            raise NoConvergence(f"truncation cap {max_N} reached at q={q}")
        fine = _solve_fixed(q, model, N2)
        common = fine.t[N2 - N : N2 + N + 1]
        if np.max(np.abs(common - coarse.t)) <= tol:
            return coarse
        coarse, N = fine, N2


def closed_form_delta_one(q, model, N=DEFAULT_TRUNCATION):
    """Exact amplitudes for ``delta = +1`` or ``delta = -1``.

    For ``delta = +1`` only channels ``alpha <= 0`` are populated, each one
    fed from its upper neighbour; ``delta = -1`` is the mirror image.
    """
    _require_single_site(model)
    if abs(abs(model.delta) - 1) > 1e-15:
        raise ValueError(f"closed form needs |delta| = 1, got {model.delta}")
    channels = build_channel_set(q, model, N)
    s = channels.sin_q_alpha
    if np.any(s == 0):
        raise SingularMatrix("a populated channel has zero group velocity")
    kappa, v0 = model.kappa, model.v0
    t = np.zeros(len(s), dtype=complex)
    i0 = channels.index(0)
    t[i0] = 1.0
    step = -1 if model.delta > 0 else 1
    k = i0 + step
    while 0 <= k < len(s):
        t[k] = v0 * t[k - step] / (2j * kappa * s[k])
        k += step
    return _assemble(channels, t)


def energy_grid(model, n=2000, lo=None, hi=None, nudge=1e-6):
    """``n`` uniform energies strictly inside ``(lo, hi)`` kept off channel openings.

    Defaults to the whole band.  Any point within ``nudge * kappa`` of an
    opening is moved to ``opening + nudge * kappa``.
    """
    kappa = model.kappa
    lo = -2 * kappa if lo is None else lo
    hi = 2 * kappa if hi is None else hi
    if n < 2:
        raise ValueError("grid needs at least 2 points")
    # open interval: drop the endpoints of an n+2 point linspace
    grid = np.linspace(lo, hi, n + 2)[1:-1]
    shift = nudge * kappa
    for e in channel_openings(model, lo - 1, hi + 1):
        close = np.abs(grid - e) < shift
        grid[close] = e + shift
    band = 2 * kappa * (1 - 1e-12)
    return np.clip(grid, -band, band)


@dataclass(frozen=True)
class ScanRow:
    energy: float
    T: float
    R: float
    status: str
    amplitudes: ScatteringAmplitudes | None = None

    def channel(self, alpha, which="T"):
        if self.amplitudes is None:
            return float("nan")
        return self.amplitudes.channel(alpha, which)


def _worker_count(workers):
    cap = os.environ.get("FLOQUET_THREADS")
    if workers is None:
        workers = int(cap) if cap else 1
    elif cap:
        workers = min(workers, int(cap))
    return max(1, workers)


def _scan_point(energy, model, N, method):
    try:
        q = momentum_from_energy(energy, model.kappa)
        if not model.is_single_site:
            from .multi import solve_floquet_lattice

            amp = solve_floquet_lattice(q, model, N).amplitudes
        elif method == "closed_form":
            amp = closed_form_delta_one(q, model, N)
        else:
            amp = solve_amplitudes(q, model, N)
    except FloquetError as exc:
        return ScanRow(float(energy), float("nan"), float("nan"), type(exc).__name__)
    status = "near_singular" if amp.near_singular else "ok"
    return ScanRow(float(energy), amp.T_total, amp.R_total, status, amp)


def spectral_scan(model, energies, N=DEFAULT_TRUNCATION, method="matrix", workers=None):
    """Total and per-channel spectra over ``energies``.

    Per-point failures become a status string on that row instead of
    aborting; row order always follows ``energies``.  Profiles with more than
    the single site ``n = 0`` are routed to the lattice-window solver.
    """
    energies = np.asarray(energies, dtype=float)
    workers = _worker_count(workers)
    if workers == 1:
        return [_scan_point(e, model, N, method) for e in energies]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda e: _scan_point(e, model, N, method), energies))


def singularity_scaling(model, alpha=-1, offsets=None, method="closed_form", N=DEFAULT_TRUNCATION):
    """Power-law exponent of ``|t_alpha|`` just above its channel opening.

    Returns ``(slope, offsets, |t_alpha|)`` from a least-squares fit of
    ``log|t_alpha|`` against ``log(E - E_alpha)``, ``E_alpha = -2 kappa - alpha*omega``.
    """
    if alpha >= 0:
        raise ValueError("only alpha <= -1 channels open inside the band for delta = 1")
    kappa = model.kappa
    e_open = -2 * kappa - alpha * model.omega
    if offsets is None:
        offsets = np.logspace(-6, -1, 25) * kappa
    offsets = np.asarray(offsets, dtype=float)
    if np.any(offsets <= 0) or np.any(offsets > 0.1 * kappa):
        raise ValueError("fit window must lie in (E_alpha, E_alpha + 0.1 kappa]")
    solver = closed_form_delta_one if method == "closed_form" else solve_amplitudes
    mags = np.empty(len(offsets))
    for k, d in enumerate(offsets):
        amp = solver(momentum_from_energy(e_open + d, kappa), model, N)
        mags[k] = abs(amp.amplitude(alpha))
    slope = np.polyfit(np.log(offsets), np.log(mags), 1)[0]
    return float(slope), offsets, mags
