import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emrelax import (CflViolation, ConstraintDrift, DDState, DopingProfile, EMState, EPState,
                     NonPositiveDensity, PeriodicGrid, PressureLaw, RelaxationConfig, em_rhs,
                     em_step, ep_rhs, ep_step, integrate, reconstruct_fields, solve_equilibrium,
                     stable_dt, well_prepared_initial_data)
from emrelax.laws import cosine_series
from emrelax.relaxation import (gauss_residual, initial_data_from_raw, maxwell_rotation,
                                relax_velocity)


@pytest.fixture(scope="module")
def eq2():
    g = PeriodicGrid(2, 32)
    law = PressureLaw(1, 1.4)
    eq = solve_equilibrium(DopingProfile(1.0, [((1, 0), 0.2)]), law, g, B_e=[0.5])
    n0 = eq.n_e + 1e-2 * cosine_series(g, 0, [((0, 1), 1.0), ((1, 1), 0.5)])
    return g, law, eq, n0


@pytest.fixture(scope="module")
def eq3():
    g = PeriodicGrid(3, 16)
    law = PressureLaw()
    eq = solve_equilibrium(DopingProfile(1.0, [((1, 0, 0), 0.2)]), law, g, B_e=[0.0, 0.0, 0.3])
    n0 = eq.n_e + 1e-2 * cosine_series(g, 0, [((0, 1, 1), 1.0)])
    return g, law, eq, n0


@given(st.integers(0, 2**31 - 1), st.floats(-50, 50), st.sampled_from([2, 3]))
def test_maxwell_rotation_is_isometry(seed, theta, dim):
    g = PeriodicGrid(dim, 8)
    rng = np.random.default_rng(seed)
    E = rng.standard_normal((dim, *g.shape))
    B = rng.standard_normal(g.shape if dim == 2 else (3, *g.shape))
    E2, B2 = maxwell_rotation(g, E, B, theta)
    before = g.l2_norm(E) ** 2 + g.l2_norm(B) ** 2
    after = g.l2_norm(E2) ** 2 + g.l2_norm(B2) ** 2
    assert after == pytest.approx(before, rel=1e-12)
    # the longitudinal part of E and div B are untouched
    np.testing.assert_allclose(g.divergence(E2), g.divergence(E), atol=1e-10)
    if dim == 3:
        np.testing.assert_allclose(g.divergence(B2), g.divergence(B), atol=1e-10)


@pytest.mark.parametrize("dim", [2, 3])
def test_maxwell_rotation_generator(dim, rng):
    g = PeriodicGrid(dim, 8)
    E = g.dealias(rng.standard_normal((dim, *g.shape)))
    B = g.dealias(rng.standard_normal(g.shape if dim == 2 else (3, *g.shape)))
    h = 1e-5
    Ep, Bp = maxwell_rotation(g, E, B, h)
    Em, Bm = maxwell_rotation(g, E, B, -h)
    np.testing.assert_allclose((Ep - Em) / (2 * h), g.curl(B), atol=1e-7)
    np.testing.assert_allclose((Bp - Bm) / (2 * h), -g.curl(E), atol=1e-7)
    # group property
    E2, B2 = maxwell_rotation(g, *maxwell_rotation(g, E, B, 0.3), 0.4)
    E3, B3 = maxwell_rotation(g, E, B, 0.7)
    np.testing.assert_allclose(E2, E3, atol=1e-12)
    np.testing.assert_allclose(B2, B3, atol=1e-12)


@given(st.floats(1e-6, 10.0), st.floats(1e-3, 1.0))
def test_relaxation_contracts(tau, eps):
    u = np.random.default_rng(0).standard_normal((2, 8))
    u2 = relax_velocity(u, np.zeros_like(u), tau, eps)
    assert np.linalg.norm(u2) <= np.linalg.norm(u)
    # fixed point u = -g
    g_ = np.ones_like(u)
    np.testing.assert_allclose(relax_velocity(-g_, g_, tau, eps), -g_, atol=1e-15)


@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_equilibrium_is_fixed_point(eq2, eps):
    g, law, eq, _ = eq2
    s0 = EMState(eq.n_e, np.zeros((2, *g.shape)), eq.E_e, eq.magnetic_field())
    cfg = RelaxationConfig(eps, 1e-3)
    s1 = em_step(s0, eq, law, cfg)
    drift = max(g.max_norm(s1.n - s0.n), g.max_norm(s1.u), g.max_norm(s1.E - s0.E),
                g.max_norm(s1.B - s0.B))
    assert drift <= 1e-10
    p1 = ep_step(EPState(eq.n_e, np.zeros((2, *g.shape))), eq, law, cfg)
    assert max(g.max_norm(p1.n - eq.n_e), g.max_norm(p1.u)) <= 1e-10


def test_rhs_vanishes_at_equilibrium(eq2):
    g, law, eq, _ = eq2
    r = em_rhs(EMState(eq.n_e, np.zeros((2, *g.shape)), eq.E_e, eq.magnetic_field()), eq, law, 0.1)
    assert max(g.max_norm(a) for a in (r.n, r.u, r.E, r.B)) <= 1e-10
    r = ep_rhs(EPState(eq.n_e, np.zeros((2, *g.shape))), eq, law, 0.1)
    assert max(g.max_norm(r.n), g.max_norm(r.u)) <= 1e-9


@pytest.mark.parametrize("fixture", ["eq2", "eq3"])
def test_mass_and_constraints_per_step(fixture, request):
    g, law, eq, n0 = request.getfixturevalue(fixture)
    s = well_prepared_initial_data(eq, n0, law, system="em")
    cfg = RelaxationConfig(0.1, 1e-3)
    mass0 = g.integrate(s.n)
    r_prev = gauss_residual(g, eq.b, s.n, s.E)
    for _ in range(20):
        s = em_step(s, eq, law, cfg)
        assert abs(g.integrate(s.n) - mass0) <= 1e-12 * mass0
        r = gauss_residual(g, eq.b, s.n, s.E)
        assert r - r_prev <= 1e-10
        r_prev = r
    if g.dim == 3:
        assert g.l2_norm(g.divergence(s.B)) <= 1e-10


def test_ep_mass_conservation_1d():
    g = PeriodicGrid(1, 64)
    law = PressureLaw()
    eq = solve_equilibrium(DopingProfile(1.0, [((1,), 0.2)]), law, g)
    s = well_prepared_initial_data(eq, eq.n_e + 0.01 * np.cos(2 * g.coords[0]), law, system="ep")
    mass0 = g.integrate(s.n)
    for _ in range(50):
        s = ep_step(s, eq, law, RelaxationConfig(0.05, 1e-3))
    assert abs(g.integrate(s.n) - mass0) <= 1e-11 * mass0


def test_second_order_consistency_with_rhs(eq2):
    """For eps = 1 the split step converges at second order to the rhs flow."""
    g, law, eq, n0 = eq2
    s0 = well_prepared_initial_data(eq, n0, law, system="em")
    s0.u = s0.u + 0.05 * np.stack([np.sin(g.coords[1]), np.cos(g.coords[0])])

    def rk4(s, h, steps):
        for _ in range(steps):
            def add(a, k, c):
                return EMState(a.n + c * k.n, a.u + c * k.u, a.E + c * k.E, a.B + c * k.B)
            k1 = em_rhs(s, eq, law, 1.0)
            k2 = em_rhs(add(s, k1, h / 2), eq, law, 1.0)
            k3 = em_rhs(add(s, k2, h / 2), eq, law, 1.0)
            k4 = em_rhs(add(s, k3, h), eq, law, 1.0)
            s = EMState(*(getattr(s, f) + h / 6 * (getattr(k1, f) + 2 * getattr(k2, f)
                                                     + 2 * getattr(k3, f) + getattr(k4, f))
                          for f in ("n", "u", "E", "B")))
        return s

    T = 0.02
    ref = rk4(s0, T / 160, 160)
    errs = []
    for m in (8, 16, 32):
        s = s0
        cfg = RelaxationConfig(1.0, T / m)
        for _ in range(m):
            s = em_step(s, eq, law, cfg)
        errs.append(sum(g.l2_norm(getattr(s, f) - getattr(ref, f)) for f in ("n", "u", "E", "B")))
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_small_epsilon_relaxes_to_limit_velocity(eq2):
    g, law, eq, n0 = eq2
    s = well_prepared_initial_data(eq, n0, law, system="ep", velocity="rest")
    cfg = RelaxationConfig(1e-3, 1e-3)
    for _ in range(5):
        s = ep_step(s, eq, law, cfg)
    u_bar = reconstruct_fields(DDState(s.n), g, eq.b, law)[2]
    assert g.l2_norm(s.u - u_bar) <= 1e-3 * g.l2_norm(u_bar)


def test_well_prepared_data(eq2):
    g, law, eq, n0 = eq2
    for velocity in ("limit", "rest"):
        s = well_prepared_initial_data(eq, n0, law, system="em", velocity=velocity)
        _, E_bar, u_bar = reconstruct_fields(DDState(n0), g, eq.b, law)
        assert gauss_residual(g, eq.b, s.n, s.E) <= 1e-12
        assert g.l2_norm(s.E - E_bar) == 0.0
        np.testing.assert_array_equal(s.B, eq.magnetic_field())
        np.testing.assert_array_equal(s.u, u_bar if velocity == "limit" else 0 * u_bar)
    at_eq = well_prepared_initial_data(eq, eq.n_e, law, system="em")
    # limited only by the equilibrium solver tolerance
    assert g.max_norm(at_eq.u) <= 1e-10
    np.testing.assert_allclose(at_eq.E, eq.E_e, atol=1e-10)
    with pytest.raises(ValueError):
        well_prepared_initial_data(eq, n0, law, delta=1e-6)
    with pytest.raises(ValueError):
        well_prepared_initial_data(eq, n0, law, velocity="fast")


def test_em_needs_two_dimensions():
    g = PeriodicGrid(1, 16)
    law = PressureLaw()
    eq = solve_equilibrium(DopingProfile(1.0), law, g)
    with pytest.raises(ValueError):
        well_prepared_initial_data(eq, eq.n_e, law, system="em")


def test_raw_initial_data_needs_expert_flag(eq2):
    g, law, eq, n0 = eq2
    u0 = np.ones((2, *g.shape))
    with pytest.raises(ValueError):
        initial_data_from_raw(eq, RelaxationConfig(0.1, 1e-3), n0, u0)
    s = initial_data_from_raw(eq, RelaxationConfig(0.1, 1e-3, raw_initial_data=True), n0, u0)
    np.testing.assert_allclose(s.u, 10.0)


def test_solver_guards(eq2):
    g, law, eq, n0 = eq2
    s = well_prepared_initial_data(eq, n0, law, system="em")
    limit = stable_dt(g, law, s.n, s.u, s.B, 0.1)
    with pytest.raises(CflViolation):
        em_step(s, eq, law, RelaxationConfig(0.1, 2 * limit))
    bad = EMState(-s.n, s.u, s.E, s.B)
    with pytest.raises(NonPositiveDensity):
        em_step(bad, eq, law, RelaxationConfig(0.1, 1e-3))
    broken = EMState(s.n, s.u, s.E + 1e-3, s.B)
    broken.E[0] += 1e-3 * np.cos(g.coords[0])
    with pytest.raises(ConstraintDrift):
        integrate(broken, eq, law, RelaxationConfig(0.1, 1e-3, t_end=0.01))
    with pytest.raises(ValueError):
        RelaxationConfig(0.0, 1e-3)


def test_trajectory_snapshots(eq2, tmp_path):
    g, law, eq, n0 = eq2
    s = well_prepared_initial_data(eq, n0, law, system="em")
    traj = integrate(s, eq, law, RelaxationConfig(0.5, 1e-3, t_end=0.2), layer=0)
    assert len(traj) >= 50
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(0.2)
    assert traj.drift_E <= 1e-10
    traj.save(tmp_path / "run", stride=10)
    assert (tmp_path / "run" / "index.csv").exists()
    assert (tmp_path / "run" / "B_00000.snap").exists()


def test_cost_independent_of_epsilon(eq2):
    g, law, eq, n0 = eq2
    s0 = well_prepared_initial_data(eq, n0, law, system="em")
    epsilons = (0.4, 0.2, 0.1, 0.05)
    times = {eps: [] for eps in epsilons}
    for _ in range(7):
        for eps in epsilons:
            cfg = RelaxationConfig(eps, 1e-3)
            s = s0
            t0 = time.perf_counter()
            for _ in range(10):
                s = em_step(s, eq, law, cfg)
            times[eps].append(time.perf_counter() - t0)
    med = [np.median(t) for t in times.values()]
    assert max(med) / min(med) < 1.2
