import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from floquet_invisibility.errors import ChannelOpening, SingularMatrix
from floquet_invisibility.model import LatticeModel, build_channel_set, channel_openings, momentum_from_energy
from floquet_invisibility.single import (
    Tridiagonal,
    build_floquet_matrix,
    closed_form_delta_one,
    energy_grid,
    singularity_scaling,
    solve_amplitudes,
    solve_tridiagonal,
    spectral_scan,
)

in_band = st.floats(-1.95, 1.95)
v0s = st.floats(0.1, 3.0)
omegas = st.floats(0.3, 4.0)
deltas = st.floats(-1.0, 1.0)


def _safe(e, model):
    return np.min(np.abs(channel_openings(model, -3, 3) - e), initial=1.0) > 1e-3


def _recurrence_residual(q, model, amp):
    # plug the returned amplitudes back into the channel equations
    th1, th2 = model.impurity_couplings()
    t = amp.t
    s = amp.channels.sin_q_alpha
    lhs = -2j * model.kappa * s * t
    lhs[:-1] += th1 * t[1:]
    lhs[1:] += th2 * t[:-1]
    rhs = np.zeros_like(lhs)
    rhs[amp.channels.index(0)] = -2j * model.kappa * np.sin(q)
    return np.max(np.abs(lhs - rhs))


def test_tridiagonal_matches_dense_solve():
    rng = np.random.default_rng(3)
    n = 30
    mat = Tridiagonal(
        rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1),
        rng.normal(size=n) + 4 + 1j * rng.normal(size=n),
        rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1),
    )
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    x = solve_tridiagonal(mat, b)
    assert np.allclose(x, np.linalg.solve(mat.dense(), b), atol=1e-12)
    assert np.allclose(mat.matvec(x), b, atol=1e-12)


def test_tridiagonal_singular_is_reported():
    mat = Tridiagonal(np.zeros(2, complex), np.array([1, 0, 1], complex), np.zeros(2, complex))
    with pytest.raises(SingularMatrix):
        solve_tridiagonal(mat, np.ones(3))


def test_matrix_layout():
    m = LatticeModel.single(2.0, 1.5, 0.6)
    ch = build_channel_set(1.1, m, 4)
    M = build_floquet_matrix(ch, m).dense()
    assert np.allclose(np.diag(M, 1), 1.6) and np.allclose(np.diag(M, -1), 0.4)
    assert np.allclose(np.diag(M), -2j * np.sin(ch.q_alpha))


@given(in_band, v0s, omegas, deltas)
def test_amplitudes_satisfy_recurrence(e, v0, omega, delta):
    m = LatticeModel.single(v0, omega, delta)
    assume(_safe(e, m))
    q = momentum_from_energy(e)
    amp = solve_amplitudes(q, m)
    assert _recurrence_residual(q, m, amp) < 1e-10
    assert amp.r[amp.channels.index(0)] == pytest.approx(amp.t[amp.channels.index(0)] - 1)


@given(in_band, v0s, omegas)
def test_hermitian_flux_conservation(e, v0, omega):
    m = LatticeModel.single(v0, omega, 0.0)
    assume(_safe(e, m))
    amp = solve_amplitudes(momentum_from_energy(e), m)
    assert amp.T_total + amp.R_total == pytest.approx(1.0, abs=1e-8)


@given(in_band, v0s, omegas, st.floats(-0.95, 0.95))
def test_theta_gauge_remap(e, v0, omega, delta):
    # t_a -> lambda^a s_a with lambda^2 = theta2/theta1 maps (theta1, theta2)
    # onto the symmetric pair sqrt(theta1 theta2)
    m = LatticeModel.single(v0, omega, delta)
    sym = LatticeModel.single(v0 * np.sqrt(1 - delta**2), omega, 0.0)
    assume(_safe(e, m))
    q = momentum_from_energy(e)
    a, b = solve_amplitudes(q, m, 20), solve_amplitudes(q, sym, 20)
    N = min(a.channels.truncation, b.channels.truncation)
    lam = np.sqrt((1 - delta) / (1 + delta))
    for alpha in range(-3, 4):
        if abs(alpha) <= N:
            assert a.amplitude(alpha) == pytest.approx(lam**alpha * b.amplitude(alpha), abs=1e-9)


@given(in_band, v0s, omegas, st.sampled_from([1.0, -1.0]))
def test_closed_form_matches_matrix(e, v0, omega, delta):
    m = LatticeModel.single(v0, omega, delta)
    assume(_safe(e, m))
    q = momentum_from_energy(e)
    num = solve_amplitudes(q, m)
    ref = closed_form_delta_one(q, m, num.channels.truncation)
    assert np.allclose(num.t, ref.t, atol=1e-10, rtol=1e-10)


def test_closed_form_explicit_first_channel():
    m = LatticeModel.single(1.0, 1.5, 1.0)
    q = momentum_from_energy(-0.2)
    amp = closed_form_delta_one(q, m)
    s1 = np.sin(amp.channels[-1].q)
    assert amp.amplitude(-1) == pytest.approx(1.0 / (2j * s1))
    assert np.all(amp.t[amp.channels.index(1):] == 0)
    assert amp.amplitude(0) == 1


def test_closed_form_rejects_partial_delta():
    with pytest.raises(ValueError):
        closed_form_delta_one(1.0, LatticeModel.single(1.0, 1.5, 0.5))


@given(st.floats(-1.99, -0.51), v0s)
def test_invisibility_window(e, v0):
    amp = solve_amplitudes(momentum_from_energy(e), LatticeModel.single(v0, 1.5, 1.0))
    assert amp.T_total == pytest.approx(1.0, abs=1e-10)
    assert amp.R_total == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-1.9, 1.9), v0s, st.floats(0.4, 3.0))
def test_mirror_property(e, v0, omega):
    plus = LatticeModel.single(v0, omega, 1.0)
    minus = plus.with_(delta=-1.0)
    assume(_safe(e, plus))
    a = solve_amplitudes(momentum_from_energy(e), plus)
    b = solve_amplitudes(momentum_from_energy(-e), minus)
    assert a.T_total == pytest.approx(b.T_total, rel=1e-9)
    for alpha in range(-2, 3):
        assert abs(a.amplitude(alpha)) == pytest.approx(abs(b.amplitude(-alpha)), rel=1e-9, abs=1e-14)


def test_per_channel_flux_nan_for_evanescent():
    m = LatticeModel.single(2.0, 1.5, 0.3)
    amp = solve_amplitudes(momentum_from_energy(0.0), m)
    assert np.isnan(amp.channel(2)) and np.isnan(amp.channel(-2))
    assert amp.channel(1) >= 0
    assert np.isnan(amp.channel(10_000))


def test_energy_grid_avoids_openings():
    m = LatticeModel.single(2.0, 0.5, 1.0)
    E = energy_grid(m, 801)
    assert len(E) == 801
    assert E.min() > -2 and E.max() < 2
    openings = channel_openings(m)
    assert np.min(np.abs(E[:, None] - openings[None, :])) >= 1e-6 * 0.999
    assert np.array_equal(E, energy_grid(m, 801))


def test_energy_grid_bounds():
    m = LatticeModel.single(2.0, 1.5)
    E = energy_grid(m, 10, -1.0, 1.0)
    assert E.min() > -1 and E.max() < 1
    with pytest.raises(ValueError):
        energy_grid(m, 1)


def test_scan_keeps_order_and_reports_failures():
    m = LatticeModel.single(2.0, 1.5, 0.5)
    rows = spectral_scan(m, [0.3, -0.5, -1.2])
    assert [r.energy for r in rows] == [0.3, -0.5, -1.2]
    assert rows[1].status == ChannelOpening.__name__ and np.isnan(rows[1].T)
    assert rows[0].status == "ok" and rows[2].status == "ok"


def test_scan_threads_agree(monkeypatch):
    m = LatticeModel.single(2.0, 1.5, 0.5)
    E = energy_grid(m, 50)
    serial = spectral_scan(m, E, workers=1)
    monkeypatch.setenv("FLOQUET_THREADS", "3")
    threaded = spectral_scan(m, E, workers=4)
    assert [r.T for r in serial] == [r.T for r in threaded]


def test_scan_routes_multi_site_profiles():
    m = LatticeModel(1.0, 1.5, 1.0, {-1: 1.0, 0: 1.0, 1: 1.0})
    rows = spectral_scan(m, [-1.5, -0.8])
    assert all(r.status == "ok" for r in rows)
    assert rows[0].T == pytest.approx(1.0, abs=1e-8)


def test_near_singular_flag():
    m = LatticeModel.single(2.0, 1.5, 1.0)
    e = -0.5 + 5e-9
    amp = solve_amplitudes(momentum_from_energy(e), m)
    assert amp.near_singular
    assert not solve_amplitudes(momentum_from_energy(-0.3), m).near_singular


def test_singularity_exponent():
    m = LatticeModel.single(1.0, 1.5, 1.0)
    slope, offs, mags = singularity_scaling(m)
    assert slope == pytest.approx(-0.5, abs=0.02)
    assert np.all(np.diff(mags) < 0)
    with pytest.raises(ValueError):
        singularity_scaling(m, alpha=1)


def test_hermitian_resonance_dips():
    from scipy.signal import find_peaks

    m = LatticeModel.single(2.0, 1.5, 0.0)
    E = energy_grid(m, 1000)
    T = np.array([r.T for r in spectral_scan(m, E)])
    dips, _ = find_peaks(-T)
    assert len(dips) == 2
