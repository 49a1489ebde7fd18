"""Search for Floquet bound states of a single oscillating impurity.

A bound state with quasi-energy ``E`` has amplitudes ``B_a`` solving the
homogeneous channel recurrence

    theta1 B_{a+1} + theta2 B_{a-1} - 2i kappa sin(q_a) B_a = 0,   2 kappa cos q_a = E + a w,

so ``E`` must be a zero of the truncated tridiagonal determinant ``I_N(E)``,
and it is only accepted when every populated channel decays (``Im q_a < 0``).
The determinant depends on the couplings only through ``theta1 * theta2``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ScanResolutionTooCoarse
from .model import OPENING_TOL, decaying_arccos

DEFAULT_CHANNELS = 21
MAX_CHANNELS = 85
ROOT_TOL = 1e-7
BRANCH_RADIUS = 1e-6


class Verdict(str, enum.Enum):
    ACCEPTED = "Accepted"
    REJECTED_REAL_CHANNEL = "RejectedRealChannel"
    REJECTED_BAND_EDGE = "RejectedBandEdge"
    # weight piled up on the outermost retained channel: an artefact of the cut
    REJECTED_TRUNCATION = "RejectedTruncation"


def _alphas(N):
    if N < 3 or N % 2 == 0:
        raise ValueError(f"channel count N must be odd and >= 3, got {N}")
    M = (N - 1) // 2
    return np.arange(-M, M + 1)


def diagonal_entries(E, model, N):
    """``-2i kappa sin(q_a)`` with the decaying branch; shape ``E.shape + (N,)``."""
    E = np.asarray(E, dtype=complex)
    z = (E[..., None] + _alphas(N) * model.omega) / (2 * model.kappa)
    return -2j * model.kappa * np.sin(decaying_arccos(z))


@numba.njit(cache=True)
def _edge_entry(z, kappa):
    # -2i kappa sin(q) = 2 kappa (w - z) with w = exp(-iq) the root of
    # w^2 - 2zw + 1 = 0 inside the unit disk; on the cut pick sin(q) >= 0
    r = cmath.sqrt(z * z - 1)
    w1 = z - r
    w2 = z + r
    m1 = abs(w1)
    m2 = abs(w2)
    if abs(m1 - m2) < 1e-14:
        w = w1 if w1.imag <= w2.imag else w2
    elif m1 < m2:
        w = w1
    else:
        w = w2
    return 2 * kappa * (w - z)


@numba.njit(cache=True)
def _minor_recurrence(E, alphas, omega, kappa, p, bound_extra):
    n = E.shape[0]
    mant = np.empty(n, dtype=np.complex128)
    logs = np.zeros(n)
    bound = np.zeros(n)
    for i in range(n):
        prev = 1.0 + 0j
        cur = 0j
        ls = 0.0
        b = 0.0
        for k in range(alphas.shape[0]):
            z = (E[i] + alphas[k] * omega) / (2 * kappa)
            a = _edge_entry(z, kappa)
            b += math.log(abs(a) + bound_extra)
            if k == 0:
                cur = a
            else:
                cur, prev = a * cur - p * prev, cur
            s = max(abs(cur), abs(prev))
            if s > 0:
                cur /= s
                prev /= s
                ls += math.log(s)
        mant[i] = cur
        logs[i] = ls
        bound[i] = b
    return mant, logs, bound


def _recurrence(E, model, N):
    E = np.asarray(E, dtype=complex)
    theta1, theta2 = model.impurity_couplings()
    m, ls, b = _minor_recurrence(
        E.ravel(), _alphas(N).astype(np.float64), float(model.omega), float(model.kappa),
        complex(theta1 * theta2), abs(theta1) + abs(theta2),
    )
    return m.reshape(E.shape), ls.reshape(E.shape), b.reshape(E.shape)


def log_determinant(E, model, N=DEFAULT_CHANNELS):
    """``I_N(E)`` as ``(mantissa, log_scale)`` with ``I_N = mantissa * exp(log_scale)``.

    Leading principal minors follow ``D_k = a_k D_{k-1} - theta1*theta2 D_{k-2}``;
    the pair ``(D_k, D_{k-1})`` is rescaled each step so nothing overflows.
    """
    m, ls, _ = _recurrence(E, model, N)
    return m, ls


def determinant(E, model, N=DEFAULT_CHANNELS, scaled=True):
    if scaled:
        m, ls = log_determinant(E, model, N)
        return m * np.exp(ls)
    a = diagonal_entries(E, model, N)
    theta1, theta2 = model.impurity_couplings()
    prev = np.ones(a.shape[:-1], dtype=complex)
    cur = a[..., 0].copy()
    for k in range(1, N):
        cur, prev = a[..., k] * cur - theta1 * theta2 * prev, cur
    return cur


def channel_matrix(E, model, N=DEFAULT_CHANNELS):
    """Dense truncated bound-state matrix at a single ``E``."""
    a = diagonal_entries(complex(E), model, N)
    theta1, theta2 = model.impurity_couplings()
    return np.diag(a) + theta1 * np.eye(N, k=1) + theta2 * np.eye(N, k=-1)


def normalized_determinant(E, model, N=DEFAULT_CHANNELS):
    """``|I_N|`` divided by the Hadamard bound (product of row 1-norms), in ``[0, 1]``."""
    m, ls, bound = _recurrence(E, model, N)
    return np.abs(m) * np.exp(ls - bound)


@dataclass(frozen=True)
class CandidateRoot:
    energy: complex
    modulus: float
    verdict: Verdict
    amplitudes: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "energy_re": self.energy.real,
            "energy_im": self.energy.imag,
            "modulus": self.modulus,
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class BoundStateReport:
    kappa: float
    omega: float
    delta: float
    v0: float
    N: int
    candidate_roots: tuple
    no_bound_states: bool
    certified_regime: bool
    winding_upper: int = 0
    winding_lower: int = 0

    @property
    def accepted(self):
        return [c for c in self.candidate_roots if c.verdict is Verdict.ACCEPTED]

    def to_dict(self):
        d = asdict(self)
        d["candidate_roots"] = [c.to_dict() for c in self.candidate_roots]
        return d


def classify_root(E, model, N=DEFAULT_CHANNELS, amp_tol=1e-8, edge_tol=1e-3):
    """Reconstruct ``B_a`` at a root and apply the localization screen.

    Roots whose amplitudes do not decay towards the truncation boundary
    (``|B|`` at either end above ``edge_tol``) are rejected as cut artefacts.
    """
    L = channel_matrix(E, model, N)
    _, _, vh = np.linalg.svd(L)
    b = vh[-1].conj()
    b = b / np.max(np.abs(b))
    z = (complex(E) + _alphas(N) * model.omega) / (2 * model.kappa)
    q = decaying_arccos(z)
    populated = np.abs(b) > amp_tol
    on_edge = populated & (np.abs(z.imag) < OPENING_TOL) & (np.abs(1 - np.abs(z.real)) < OPENING_TOL)
    real = populated & (q.imag > -1e-12)
    if on_edge.any():
        verdict = Verdict.REJECTED_BAND_EDGE
    elif max(abs(b[0]), abs(b[-1])) > edge_tol:
        verdict = Verdict.REJECTED_TRUNCATION
    elif real.any():
        verdict = Verdict.REJECTED_REAL_CHANNEL
    else:
        verdict = Verdict.ACCEPTED
    return verdict, tuple(b)


def branch_points(model, N=DEFAULT_CHANNELS):
    """Real energies where some channel sits on a band edge."""
    al = _alphas(N)
    pts = np.concatenate([-al * model.omega - 2 * model.kappa, -al * model.omega + 2 * model.kappa])
    return np.unique(np.round(pts, 12))


def _real_axis_roots(model, N, lo, hi, step):
    kappa = model.kappa
    roots = []
    edges = branch_points(model, N)
    edges = edges[(edges >= lo) & (edges <= hi)]
    for e in edges:
        val = float(normalized_determinant(e, model, N))
        if val < ROOT_TOL:
            roots.append((complex(e), val))

    grid = np.arange(lo, hi + step / 2, step)
    f = normalized_determinant(grid, model, N)
    interior = np.nonzero((f[1:-1] <= f[:-2]) & (f[1:-1] <= f[2:]))[0] + 1
    radius = BRANCH_RADIUS * kappa
    obj = lambda x: float(normalized_determinant(x, model, N))
    for i in interior:
        res = minimize_scalar(obj, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": 1e-13 * kappa})
        x = float(res.x)
        if len(edges) and np.min(np.abs(edges - x)) < radius:
            continue
        if res.fun < ROOT_TOL:
            roots.append((complex(x), float(res.fun)))
    return roots


def _winding_along(fn, path, max_rounds=30):
    """Net phase of ``fn`` along a closed polyline; segments are bisected
    until every phase step is below pi/4."""
    path = np.asarray(path, dtype=complex)
    vals = fn(path)
    for _ in range(max_rounds):
        steps = np.angle(vals[1:] / vals[:-1])
        coarse = np.nonzero(np.abs(steps) > np.pi / 4)[0]
        if len(coarse) == 0:
            break
        mids = 0.5 * (path[coarse] + path[coarse + 1])
        path = np.insert(path, coarse + 1, mids)
        vals = np.insert(vals, coarse + 1, fn(mids))
    return float(np.sum(np.angle(vals[1:] / vals[:-1])))


def winding_number(model, N, re_lo, re_hi, im_lo, im_hi, samples=400):
    """Zeros of ``I_N`` inside the rectangle, by the argument principle."""
    xs = np.linspace(re_lo, re_hi, samples)
    ys = np.linspace(im_lo, im_hi, max(samples // 2, 2))
    path = np.concatenate([
        xs + 1j * im_lo, re_hi + 1j * ys[1:], xs[::-1][1:] + 1j * im_hi, re_lo + 1j * ys[::-1][1:],
    ])
    fn = lambda z: log_determinant(z, model, N)[0]
    return int(round(_winding_along(fn, path) / (2 * np.pi)))


def _locate_complex_roots(model, N, re_lo, re_hi, im_lo, im_hi, cells):
    """Argument-principle scan over a ``cells = (nx, ny)`` grid plus Newton polish."""
    nx, ny = cells
    xs = np.linspace(re_lo, re_hi, nx + 1)
    ys = np.linspace(im_lo, im_hi, ny + 1)
    found = []
    for i in range(nx):
        for j in range(ny):
            w = winding_number(model, N, xs[i], xs[i + 1], ys[j], ys[j + 1], samples=16)
            if w == 0:
                continue
            if abs(w) > 1:
                raise ScanResolutionTooCoarse(
                    f"{w} zeros in cell Re[{xs[i]:.4g},{xs[i+1]:.4g}] Im[{ys[j]:.4g},{ys[j+1]:.4g}]"
                )
            found.append(_newton(model, N, complex(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))))
    return found


def _newton(model, N, z, iters=60):
    h = 1e-7 * model.kappa
    for _ in range(iters):
        f = complex(determinant(z, model, N))
        df = (complex(determinant(z + h, model, N)) - complex(determinant(z - h, model, N))) / (2 * h)
        if df == 0:
            break
        dz = f / df
        z -= dz
        if abs(dz) < 1e-14 * max(1.0, abs(z)):
            break
    return z


def _search(model, N, real_step, cells, im_min, im_max):
    kappa, omega = model.kappa, model.omega
    lo, hi = -2 * kappa - N * omega, 2 * kappa + N * omega
    roots = _real_axis_roots(model, N, lo, hi, real_step * kappa)
    w_up = winding_number(model, N, lo, hi, im_min, im_max)
    w_dn = winding_number(model, N, lo, hi, -im_max, -im_min)
    if w_up:
        roots += [(z, float(normalized_determinant(z, model, N)))
                  for z in _locate_complex_roots(model, N, lo, hi, im_min, im_max, cells)]
    if w_dn:
        roots += [(z, float(normalized_determinant(z, model, N)))
                  for z in _locate_complex_roots(model, N, lo, hi, -im_max, -im_min, cells)]
    cands = []
    for z, mod in roots:
        verdict, b = classify_root(z, model, N)
        cands.append(CandidateRoot(complex(z), mod, verdict, b))
    return tuple(cands), w_up, w_dn


def find_bound_states(
    model,
    N=DEFAULT_CHANNELS,
    real_step=1e-3,
    cells=(200, 100),
    im_min=1e-3,
    im_max=None,
    stabilize=True,
    max_N=MAX_CHANNELS,
):
    """Scan the quasi-energy plane for roots of ``I_N`` and screen each one.

    The real axis is scanned for minima of the normalized determinant; each
    half plane (``im_min <= |Im E| <= im_max``) is checked by a winding
    number, and only boxes with nonzero winding are subdivided into
    ``cells``.  With ``stabilize`` the channel count is doubled until the set
    of accepted roots no longer changes.
    """
    if not model.is_single_site:
        raise ValueError("bound-state analysis is defined for a single impurity at n = 0")
    im_max = 2 * model.kappa if im_max is None else im_max
    cands, wu, wd = _search(model, N, real_step, cells, im_min, im_max)
    while stabilize:
        N2 = 2 * N + 1
        if N2 > max_N:
            break
        cands2, wu2, wd2 = _search(model, N2, real_step, cells, im_min, im_max)
        same = _accepted_energies(cands) == _accepted_energies(cands2)
        N, cands, wu, wd = N2, cands2, wu2, wd2
        if same:
            break
    certified = abs(model.delta) <= 1 and model.omega <= 4 * model.kappa
    no_bs = not any(c.verdict is Verdict.ACCEPTED for c in cands)
    return BoundStateReport(
        kappa=model.kappa,
        omega=model.omega,
        delta=model.delta,
        v0=model.v0,
        N=N,
        candidate_roots=cands,
        no_bound_states=no_bs,
        certified_regime=certified,
        winding_upper=wu,
        winding_lower=wd,
    )


def _accepted_energies(cands):
    return sorted((round(c.energy.real, 6), round(c.energy.imag, 6))
                  for c in cands if c.verdict is Verdict.ACCEPTED)
