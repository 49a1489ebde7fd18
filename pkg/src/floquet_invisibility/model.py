"""Lattice model and Floquet channel kinematics.

The lattice is ``i dc_n/dt = kappa (c_{n+1} + c_{n-1}) + V_n f(t) c_n`` with
``f(t) = cos(wt) + i delta sin(wt)``.  An incident Bloch wave of energy
``E = 2 kappa cos q`` couples to sidebands ``E + alpha*omega``; each sideband
has a momentum ``q_alpha`` that is real (propagative) or complex with negative
imaginary part (evanescent).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import BandEdge, ChannelOpening

#: ``| 1 - |cos q_alpha| |`` below this is treated as sitting on a channel opening.
OPENING_TOL = 1e-9

DEFAULT_TRUNCATION = 40


@dataclass(frozen=True)
class LatticeModel:
    """Static parameters of the driven lattice.

    ``potential`` maps site index to the real modulation amplitude ``V_n``.
    """

    kappa: float = 1.0
    omega: float = 1.5
    delta: float = 0.0
    potential: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        pot = {int(n): float(v) for n, v in dict(self.potential).items() if v != 0}
        object.__setattr__(self, "potential", MappingProxyType(dict(sorted(pot.items()))))

    @classmethod
    def single(cls, v0, omega, delta=0.0, kappa=1.0):
        return cls(kappa=kappa, omega=omega, delta=delta, potential={0: v0})

    @property
    def support(self):
        return tuple(self.potential)

    @property
    def is_single_site(self):
        return set(self.potential) <= {0}

    @property
    def v0(self):
        return self.potential.get(0, 0.0)

    def impurity_couplings(self):
        """``(theta1, theta2)`` multiplying ``exp(+iwt)`` and ``exp(-iwt)`` at site 0.

        These carry the ``V0/2`` prefactor and are only meaningful for a single
        impurity at the origin.
        """
        v0 = self.v0
        return 0.5 * v0 * (1 + self.delta), 0.5 * v0 * (1 - self.delta)

    def drive_weights(self):
        """Dimensionless ``((1+delta)/2, (1-delta)/2)``; multiplies each ``V_n``."""
        return 0.5 * (1 + self.delta), 0.5 * (1 - self.delta)

    def drive(self, t):
        """Complex drive ``f(t) = cos(wt) + i delta sin(wt)``."""
        wt = self.omega * np.asarray(t)
        return np.cos(wt) + 1j * self.delta * np.sin(wt)

    def mirrored(self):
        """Same model with the profile reflected through ``n = 0``."""
        return LatticeModel(self.kappa, self.omega, self.delta, {-n: v for n, v in self.potential.items()})

    def with_(self, **kw):
        d = dict(kappa=self.kappa, omega=self.omega, delta=self.delta, potential=dict(self.potential))
        d.update(kw)
        return LatticeModel(**d)


class ChannelKind(enum.Enum):
    PROPAGATIVE = "propagative"
    EVANESCENT = "evanescent"


@dataclass(frozen=True)
class Channel:
    alpha: int
    cos_q: float
    q: complex
    kind: ChannelKind

    @property
    def propagative(self):
        return self.kind is ChannelKind.PROPAGATIVE

    @property
    def sin_q(self):
        return np.sin(self.q)


@dataclass(frozen=True)
class ChannelSet:
    q: float
    energy: float
    kappa: float
    omega: float
    channels: tuple

    @property
    def truncation(self):
        return (len(self.channels) - 1) // 2

    @property
    def alphas(self):
        return np.array([c.alpha for c in self.channels])

    @property
    def q_alpha(self):
        return np.array([c.q for c in self.channels], dtype=complex)

    @property
    def sin_q_alpha(self):
        return np.sin(self.q_alpha)

    @property
    def propagative(self):
        return np.array([c.propagative for c in self.channels])

    @property
    def group_velocity(self):
        """``2 kappa sin q_alpha`` for propagative channels, NaN otherwise."""
        v = 2 * self.kappa * self.sin_q_alpha.real
        return np.where(self.propagative, v, np.nan)

    def index(self, alpha):
        return alpha + self.truncation

    def __getitem__(self, alpha):
        return self.channels[self.index(alpha)]


def dispersion_energy(q, kappa=1.0):
    return 2 * kappa * np.cos(q)


def momentum_from_energy(energy, kappa=1.0):
    """Forward-propagating momentum in ``(0, pi)`` for an in-band energy."""
    return float(np.arccos(energy / (2 * kappa)))


def decaying_arccos(z):
    """``arccos`` with the branch ``Im(q) <= 0``; real results land in ``[0, pi]``.

    Works elementwise on complex input too, which the bound-state determinant
    needs for complex quasi-energies.
    """
    q = np.arccos(np.asarray(z, dtype=complex))
    return np.where(q.imag > 0, -q, q)


def build_channel_set(q, model, N=DEFAULT_TRUNCATION, tol=OPENING_TOL):
    if N < 1:
        raise ValueError("truncation order N must be >= 1")
    q = float(q)
    if not 0 < q < np.pi:
        raise BandEdge(f"incidence momentum q={q} must lie strictly inside (0, pi)")
    kappa, omega = model.kappa, model.omega
    energy = dispersion_energy(q, kappa)
    channels = []
    for alpha in range(-N, N + 1):
        if alpha == 0:
            channels.append(Channel(0, float(np.cos(q)), complex(q), ChannelKind.PROPAGATIVE))
            continue
        c = np.cos(q) + alpha * omega / (2 * kappa)
        if abs(1 - abs(c)) < tol:
            raise ChannelOpening(alpha, energy)
        qa = complex(decaying_arccos(c))
        if abs(c) <= 1:
            channels.append(Channel(alpha, float(c), complex(qa.real, 0.0), ChannelKind.PROPAGATIVE))
        else:
            channels.append(Channel(alpha, float(c), qa, ChannelKind.EVANESCENT))
    return ChannelSet(q, float(energy), kappa, omega, tuple(channels))


def channel_openings(model, lo=None, hi=None, max_order=None):
    """Energies ``E`` in ``(lo, hi)`` where some sideband sits on a band edge."""
    kappa, omega = model.kappa, model.omega
    lo = -2 * kappa if lo is None else lo
    hi = 2 * kappa if hi is None else hi
    if omega == 0:
        return np.array([])
    max_order = max_order or int(np.ceil(4 * kappa / omega)) + 1
    out = set()
    for alpha in range(-max_order, max_order + 1):
        if alpha == 0:
            continue
        for edge in (-2 * kappa, 2 * kappa):
            e = edge - alpha * omega
            if lo < e < hi:
                out.add(round(e, 12))
    return np.array(sorted(out))
