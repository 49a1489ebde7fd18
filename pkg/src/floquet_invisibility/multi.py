"""Floquet scattering for a finite impurity profile oscillating collectively.

Each Floquet component obeys

    (E + a w) Phi_a = H0 Phi_a + w1 H1 Phi_{a+1} + w2 H1 Phi_{a-1},

with ``H1 = diag(V_n)`` and dimensionless weights ``w1, w2 = (1 +- delta)/2``.
The sites are restricted to a window around the support; outside it every
channel is a free lattice wave, which closes the window exactly:

    Phi_a(nL - 1) = e^{-i q_a} Phi_a(nL) + 2i sin(q) e^{-i q nL} delta_{a,0}
    Phi_a(nR + 1) = e^{-i q_a} Phi_a(nR)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .errors import NoConvergence, SingularMatrix
from .model import DEFAULT_TRUNCATION, ChannelSet, build_channel_set
from .single import ScatteringAmplitudes, Tridiagonal, _near_singular, solve_tridiagonal

DEFAULT_MARGIN = 5
CONVERGENCE_TOL = 1e-8
MAX_TRUNCATION = 320


@dataclass(frozen=True)
class FloquetField:
    """Floquet components on ``window = (nL, nR)``; ``phi[k, j]`` is channel
    ``alpha = k - N`` at site ``nL + j``."""

    window: tuple
    phi: np.ndarray
    amplitudes: ScatteringAmplitudes
    incidence: str = "left"

    @property
    def channels(self) -> ChannelSet:
        return self.amplitudes.channels

    @property
    def t(self):
        return self.amplitudes.t

    @property
    def r(self):
        return self.amplitudes.r

    @property
    def T_total(self):
        return self.amplitudes.T_total

    @property
    def R_total(self):
        return self.amplitudes.R_total

    @property
    def sites(self):
        return np.arange(self.window[0], self.window[1] + 1)

    def component(self, alpha):
        return self.phi[self.channels.index(alpha)]


def _window(model, margin):
    support = model.support or (0,)
    return min(support) - margin, max(support) + margin


def _extract(channels, phi, window, model):
    """Read ``t_a``, ``r_a`` at the outermost impurity sites, where the free
    asymptotic form is already exact and evanescent factors stay small."""
    nL, _ = window
    support = model.support or (0,)
    left, right = min(support), max(support)
    qa = channels.q_alpha
    t = phi[:, right - nL] * np.exp(1j * qa * right)
    incident = np.zeros_like(t)
    incident[channels.index(0)] = np.exp(-1j * channels.q * left)
    r = (phi[:, left - nL] - incident) * np.exp(-1j * qa * left)
    return t, r


def _closure(channels, kappa):
    return kappa * np.exp(-1j * channels.q_alpha)


def _solve_fixed(q, model, N, margin):
    channels = build_channel_set(q, model, N)
    nL, nR = _window(model, margin)
    W = nR - nL + 1
    C = 2 * N + 1
    kappa = model.kappa
    w1, w2 = model.drive_weights()
    sites = np.arange(nL, nR + 1)
    v = np.array([model.potential.get(int(n), 0.0) for n in sites])
    omega_a = channels.energy + channels.alphas * model.omega

    idx = np.arange(C * W).reshape(C, W)
    diag = np.repeat(omega_a[:, None], W, axis=1).astype(complex)
    closure = _closure(channels, kappa)
    diag[:, 0] -= closure
    diag[:, -1] -= closure
    rows, cols, vals = [idx.ravel()], [idx.ravel()], [diag.ravel()]
    # hopping within a channel
    rows += [idx[:, :-1].ravel(), idx[:, 1:].ravel()]
    cols += [idx[:, 1:].ravel(), idx[:, :-1].ravel()]
    vals += [np.full((C * (W - 1)), -kappa, dtype=complex)] * 2
    # drive couples channel a to a+1 (weight w1) and a-1 (weight w2) on impurity sites
    on = np.nonzero(v)[0]
    for k in range(C):
        if k + 1 < C and w1 != 0:
            rows.append(idx[k, on]); cols.append(idx[k + 1, on]); vals.append(-w1 * v[on] + 0j)
        if k - 1 >= 0 and w2 != 0:
            rows.append(idx[k, on]); cols.append(idx[k - 1, on]); vals.append(-w2 * v[on] + 0j)
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(C * W, C * W)
    )
    b = np.zeros(C * W, dtype=complex)
    b[idx[channels.index(0), 0]] = kappa * 2j * np.sin(q) * np.exp(-1j * q * nL)
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            x = spsolve(A, b)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise SingularMatrix(f"sparse Floquet system is singular at q={q}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrix(f"sparse Floquet system is singular at q={q}")
    phi = x.reshape(C, W)
    t, r = _extract(channels, phi, (nL, nR), model)
    return channels, phi, t, r


def _field(model, channels, phi, window, t, r, incidence):
    amp = ScatteringAmplitudes(channels, t, r, _near_singular(channels))
    return FloquetField(window, phi, amp, incidence)


def solve_floquet_lattice(
    q,
    model,
    N=DEFAULT_TRUNCATION,
    margin=DEFAULT_MARGIN,
    incidence="left",
    tol=CONVERGENCE_TOL,
    max_N=MAX_TRUNCATION,
    check_convergence=True,
):
    """Scattering state for a wave of momentum ``q`` incident from ``incidence``.

    Right incidence is computed on the mirrored profile; the returned field is
    then expressed in the mirrored coordinates (window and ``phi`` flipped back).
    """
    if margin < 2:
        raise ValueError("margin must be >= 2 sites")
    if incidence not in ("left", "right"):
        raise ValueError("incidence must be 'left' or 'right'")
    work = model.mirrored() if incidence == "right" else model
    channels, phi, t, r = _solve_fixed(q, work, N, margin)
    while check_convergence:
        if 2 * N > max_N:
            raise NoConvergence(f"truncation cap {max_N} reached at q={q}")
        ch2, phi2, t2, r2 = _solve_fixed(q, work, 2 * N, 2 * margin)
        prop = channels.propagative
        sl = slice(N, 3 * N + 1)
        dev = max(np.max(np.abs(t2[sl][prop] - t[prop])), np.max(np.abs(r2[sl][prop] - r[prop])))
        if dev <= tol:
            break
        N, margin = 2 * N, 2 * margin
        channels, phi, t, r = ch2, phi2, t2, r2
    window = _window(work, margin)
    if incidence == "right":
        window = (-window[1], -window[0])
        phi = phi[:, ::-1]
    return _field(model, channels, phi, window, t, r, incidence)


def closed_form_multi_delta_one(q, model, N=DEFAULT_TRUNCATION, margin=DEFAULT_MARGIN):
    """Exact cascade for ``|delta| = 1``.

    The elastic component is the bare incident Bloch wave.  Each inelastic
    component is the outgoing resolvent ``(E + a w - H0)^{-1}`` applied to
    ``H1`` times its neighbour nearer to ``a = 0``; only sidebands on one side
    are populated (``a <= -1`` for ``delta = +1``).
    """
    if abs(abs(model.delta) - 1) > 1e-15:
        raise ValueError(f"closed form needs |delta| = 1, got {model.delta}")
    channels = build_channel_set(q, model, N)
    nL, nR = _window(model, margin)
    sites = np.arange(nL, nR + 1)
    W = len(sites)
    kappa = model.kappa
    v = np.array([model.potential.get(int(n), 0.0) for n in sites])
    closure = _closure(channels, kappa)
    omega_a = channels.energy + channels.alphas * model.omega

    phi = np.zeros((2 * N + 1, W), dtype=complex)
    i0 = channels.index(0)
    phi[i0] = np.exp(-1j * q * sites)
    step = -1 if model.delta > 0 else 1
    k = i0 + step
    off = np.full(W - 1, -kappa, dtype=complex)
    while 0 <= k <= 2 * N:
        d = np.full(W, omega_a[k], dtype=complex)
        d[0] -= closure[k]
        d[-1] -= closure[k]
        rhs = v * phi[k - step]
        phi[k] = solve_tridiagonal(Tridiagonal(off, d, off.copy()), rhs, scale=kappa)
        k += step
    t, r = _extract(channels, phi, (nL, nR), model)
    return _field(model, channels, phi, (nL, nR), t, r, "left")
