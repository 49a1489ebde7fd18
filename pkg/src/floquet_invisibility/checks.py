"""End-to-end verification checks.

Each check reproduces one headline property of the model at a fixed
tolerance and returns a :class:`CheckResult`.  ``verify`` on the command
line and the acceptance tests both run :data:`CHECKS`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from . import boundstates as bs
from .model import LatticeModel, momentum_from_energy
from .multi import solve_floquet_lattice
from .single import (
    closed_form_delta_one,
    energy_grid,
    singularity_scaling,
    solve_amplitudes,
    spectral_scan,
)
from .timedomain import free_propagate, init_gaussian, invisibility_metric, packet_scattering, propagate


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _totals(rows):
    return np.array([r.T for r in rows]), np.array([r.R for r in rows])


def invisibility_window():
    m = LatticeModel.single(2.0, 1.5, 1.0)
    rows = spectral_scan(m, np.linspace(-1.999, -0.501, 200))
    T, R = _totals(rows)
    dT, dR = np.max(np.abs(T - 1)), np.max(np.abs(R))
    ok = dT < 1e-8 and dR < 1e-10 and all(r.status == "ok" for r in rows)
    return CheckResult("invisibility window", ok, f"max|T-1|={dT:.2e} (<1e-8), max|R|={dR:.2e} (<1e-10)")


def hermitian_baseline():
    m = LatticeModel.single(2.0, 1.5, 0.0)
    E = energy_grid(m, 2000)
    T, R = _totals(spectral_scan(m, E))
    flux = np.max(np.abs(T + R - 1))
    dips, _ = find_peaks(-T)
    ok = flux < 1e-8 and len(dips) == 2
    where = ", ".join(f"{e:.4f}" for e in E[dips])
    return CheckResult("hermitian baseline", ok, f"max|T+R-1|={flux:.2e} (<1e-8), dips={len(dips)} at E=[{where}] (want 2)")


def divergent_peaks(energies, values, prominence=0.1):
    """Energies of local maxima of ``log10(values)`` standing out by at least
    ``prominence`` decades.

    A fixed clipping ceiling does not separate neighbouring singularities
    once the background itself rises above it, so peaks are found on the
    log scale instead.
    """
    logv = np.log10(np.nan_to_num(np.asarray(values, dtype=float), nan=np.inf).clip(1e-300, 1e300))
    idx, _ = find_peaks(logv, prominence=prominence)
    return [float(energies[i]) for i in idx]


def match_openings(peaks, model, adjacency=0.05):
    """Opening order ``alpha`` for each peak lying within ``adjacency * kappa``
    above ``E = -2 kappa + alpha * omega``; ``None`` when no opening is adjacent."""
    out = []
    for p in peaks:
        a = int(np.floor((p + 2 * model.kappa) / model.omega))
        e_open = -2 * model.kappa + a * model.omega
        out.append(a if a >= 1 and 0 <= p - e_open <= adjacency * model.kappa else None)
    return out


def singularity_census():
    m = LatticeModel.single(2.0, 0.6, 1.0)
    E = energy_grid(m, 2000)
    T, _ = _totals(spectral_scan(m, E))
    matched = match_openings(divergent_peaks(E, T), m)
    ok = matched == list(range(1, 7))
    return CheckResult("singularity census", ok, f"peaks matched to alpha={matched} (want 1..6)")


def singularity_exponent():
    m = LatticeModel.single(1.0, 1.5, 1.0)
    s_closed, _, _ = singularity_scaling(m, method="closed_form")
    s_matrix, _, _ = singularity_scaling(m, method="matrix")
    ok = abs(s_closed + 0.5) <= 0.02 and abs(s_closed - s_matrix) < 1e-6
    return CheckResult(
        "singularity exponent", ok,
        f"slope={s_closed:.4f} (-0.5 +/- 0.02), matrix route differs by {abs(s_closed - s_matrix):.1e}",
    )


def closed_form_oracle():
    m = LatticeModel.single(2.0, 1.5, 1.0)
    worst = 0.0
    for e in energy_grid(m, 100):
        q = momentum_from_energy(e)
        num = solve_amplitudes(q, m)
        ref = closed_form_delta_one(q, m, num.channels.truncation)
        worst = max(worst, float(np.max(np.abs(num.t - ref.t))))
    return CheckResult("closed-form oracle", worst < 1e-10, f"max|t_matrix - t_closed|={worst:.2e} (<1e-10)")


def _packet_run(model, q0, w=20, n0=-80, L=400, t_end=100.0):
    s = init_gaussian(n0, q0, w, L, model)
    traj = propagate(s, model, t_end)
    ref = free_propagate(s, t_end, model.kappa)
    dev, resid = invisibility_metric(traj.final, ref)
    return dev, resid, traj.final.norm


def wavepacket_invisibility():
    dev, _, norm = _packet_run(LatticeModel.single(1.0, 1.5, 1.0), 2.0)
    ok = dev < 1e-2 and abs(norm - 1) < 1e-2
    return CheckResult("wave-packet invisibility", ok, f"max deviation={dev:.2e} (<1e-2), |P-1|={abs(norm - 1):.2e} (<1e-2)")


def boundary_energy_scattering():
    m = LatticeModel.single(1.0, 1.5, 1.0)
    _, inside, _ = _packet_run(m, 2.0)
    _, edge, _ = _packet_run(m, 1.8235)
    ratio = edge / inside
    return CheckResult("boundary-energy scattering", ratio > 10,
                       f"residual |n|<=20: {edge:.3e} vs {inside:.3e}, ratio={ratio:.1f} (>10)")


def multi_impurity_invisibility():
    m = LatticeModel(1.0, 1.5, 1.0, {n: 1.0 for n in range(-2, 3)})
    dev, _, norm = _packet_run(m, 2.0)
    ok = dev < 1e-2 and abs(norm - 1) < 1e-2
    return CheckResult("multi-impurity invisibility", ok, f"max deviation={dev:.2e} (<1e-2), |P-1|={abs(norm - 1):.2e} (<1e-2)")


SWEEP_DELTA = (0.0, 0.25, 0.5, 0.75, 1.0)
SWEEP_OMEGA = (0.6, 1.5, 2.0, 3.5, 4.0)
SWEEP_V0 = (1.0, 2.0)


def no_bound_states():
    failures = []
    for d, w, v in itertools.product(SWEEP_DELTA, SWEEP_OMEGA, SWEEP_V0):
        rep = bs.find_bound_states(LatticeModel.single(v, w, d))
        if not rep.no_bound_states:
            failures.append((d, w, v))
    E = np.array([0.3 + 0.1j, -1.7 + 0j, 5.2 - 0.4j, 1.1 + 1.5j, -8.0 + 0j])
    worst = 0.0
    for d in (0.25, 0.6, 0.9):
        a = bs.determinant(E, LatticeModel.single(2.0, 1.5, d))
        b = bs.determinant(E, LatticeModel.single(2.0 * np.sqrt(1 - d * d), 1.5, 0.0))
        worst = max(worst, float(np.max(np.abs(a - b) / np.abs(a))))
    ok = not failures and worst < 1e-10
    return CheckResult("no bound states", ok, f"cells with bound states={failures or 'none'} of 50, remap rel. error={worst:.1e} (<1e-10)")


CONSISTENCY_ENERGIES = (-1.2, 0.3, 1.5)


def frequency_time_consistency():
    worst = 0.0
    for d in (0.0, 0.6, 1.0):
        m = LatticeModel.single(2.0, 1.5, d)
        for e in CONSISTENCY_ENERGIES:
            q = momentum_from_energy(e)
            T = solve_amplitudes(q, m).T_total
            P, _ = packet_scattering(m, q, w=100)
            worst = max(worst, abs(P - T) / T)
    return CheckResult("frequency/time consistency", worst <= 0.02, f"max relative |P_T - T|/T={worst:.2e} (<=2%)")


def mirror_property():
    worst = 0.0
    for omega in (1.5, 0.6):
        plus = LatticeModel.single(2.0, omega, 1.0)
        minus = plus.with_(delta=-1.0)
        E = energy_grid(plus, 400)
        Tp, Rp = _totals(spectral_scan(plus, E))
        Tm, Rm = _totals(spectral_scan(minus, -E))
        worst = max(worst, np.max(np.abs(Tp - Tm)), np.max(np.abs(Rp - Rm)))
    return CheckResult("mirror property", worst < 1e-10, f"max|spectrum(+1,E) - spectrum(-1,-E)|={worst:.2e} (<1e-10)")


# supplementary invariants for the verify subcommand


def random_profile_invisibility(seed=0, count=20):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        pot = {n: float(v) for n, v in zip(range(-5, 6), rng.uniform(-2, 2, 11))}
        m = LatticeModel(1.0, 1.5, 1.0, pot)
        e = float(rng.uniform(-1.95, -0.55))
        f = solve_floquet_lattice(momentum_from_energy(e), m)
        worst = max(worst, abs(f.T_total - 1), abs(f.R_total))
    return CheckResult("random-profile invisibility", worst < 1e-8, f"max(|T-1|, |R|)={worst:.2e} over {count} profiles (<1e-8)")


def random_profile_flux(seed=1, count=10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        pot = {n: float(v) for n, v in zip(range(-5, 6), rng.uniform(-2, 2, 11))}
        m = LatticeModel(1.0, 1.5, 0.0, pot)
        e = float(rng.uniform(-1.9, 1.9))
        f = solve_floquet_lattice(momentum_from_energy(e), m)
        worst = max(worst, abs(f.T_total + f.R_total - 1))
    return CheckResult("hermitian flux, random profiles", worst < 1e-8, f"max|T+R-1|={worst:.2e} (<1e-8)")


def full_band_window():
    m = LatticeModel.single(2.0, 3.5, 1.0)
    T, R = _totals(spectral_scan(m, np.linspace(-1.999, 1.499, 200)))
    worst = max(np.max(np.abs(T - 1)), np.max(np.abs(R)))
    return CheckResult("wide invisibility window (omega=3.5)", worst < 1e-10, f"max(|T-1|, |R|)={worst:.2e} on (-2, 1.5) (<1e-10)")


CHECKS = {
    "1": invisibility_window,
    "2": hermitian_baseline,
    "3": singularity_census,
    "4": singularity_exponent,
    "5": closed_form_oracle,
    "6": wavepacket_invisibility,
    "7": boundary_energy_scattering,
    "8": multi_impurity_invisibility,
    "9": no_bound_states,
    "10": frequency_time_consistency,
    "11": mirror_property,
}

EXTRA_CHECKS = {
    "random-invisibility": random_profile_invisibility,
    "random-flux": random_profile_flux,
    "wide-window": full_band_window,
}


def run_all(include_extra=True, echo=None, seed=None):
    """Run every check in order; ``seed`` offsets the random-profile generators."""
    results = []
    suites = dict(CHECKS, **(EXTRA_CHECKS if include_extra else {}))
    for key, fn in suites.items():
        if seed is not None and fn in (random_profile_invisibility, random_profile_flux):
            res = fn(seed=seed + (fn is random_profile_flux))
        else:
            res = fn()
        results.append((key, res))
        if echo:
            echo(f"{key:>20}  {res.line()}")
    return results

