import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distload import planar
from distload.planar import LoadParams, LoadState, Wrench2

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square_params(m=2.0, J=3.0):
    return LoadParams(m, J, np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.3, -0.7]]))


def random_setup(seed, n=5):
    rng = np.random.default_rng(seed)
    params = LoadParams(rng.uniform(1, 5), rng.uniform(1, 5), rng.normal(size=(n, 2)))
    state = LoadState(rng.normal(size=2), rng.uniform(-3, 3), rng.normal(size=2), rng.normal())
    wrenches = [Wrench2(rng.normal(size=2), rng.normal()) for _ in range(n)]
    return params, state, wrenches


# -- perp and grasp ------------------------------------------------------------


@pytest.mark.parametrize("q, expected", [((1, 0), (0, 1)), ((0, 1), (-1, 0)), ((3, -2), (2, 3))])
def test_perp_examples(q, expected):
    assert np.array_equal(planar.perp(q), expected)


@given(finite, finite)
def test_perp_twice_negates(x, y):
    assert np.array_equal(planar.perp(planar.perp((x, y))), -np.array([x, y]))


def test_partial_grasp_examples():
    assert np.array_equal(planar.partial_grasp((2, 3), (2, 3)), np.eye(3))
    assert np.array_equal(planar.partial_grasp((1, 0), (0, 0))[2], [0, 1, 1])
    G = planar.partial_grasp((0.5 + 2.0, -1.5 + 1.0), (0.5, -1.5))
    assert np.array_equal(G[2], [-1.0, 2.0, 1.0])
    assert np.array_equal(G[:2, :2], np.eye(2))
    assert np.array_equal(G[:2, 2], [0, 0])


# -- parameters and state ------------------------------------------------------


@pytest.mark.parametrize(
    "m, J, r",
    [
        (0.0, 1.0, [[1, 0], [0, 1]]),
        (1.0, -1.0, [[1, 0], [0, 1]]),
        (1.0, 1.0, [[1, 0]]),
        (1.0, 1.0, [[1, 0], [1, 0]]),
        (1.0, 1.0, [[1, 0, 0], [0, 1, 0]]),
    ],
)
def test_load_params_rejects_invalid(m, J, r):
    with pytest.raises(ValueError):
        LoadParams(m, J, np.array(r, dtype=float))


def test_load_params_rejects_environment_wrench():
    with pytest.raises(ValueError):
        LoadParams(1.0, 1.0, np.eye(2), g_env=(0.0, 1.0, 0.0))


def test_load_params_offsets_are_read_only():
    p = square_params()
    with pytest.raises(ValueError):
        p.r_contacts[0, 0] = 5.0


def test_wrench_rejects_non_finite():
    with pytest.raises(ValueError):
        Wrench2((math.nan, 0.0))
    with pytest.raises(ValueError):
        Wrench2((0.0, 0.0), math.inf)


def test_state_vector_round_trip():
    s = LoadState((1, 2), 0.3, (4, 5), 6)
    assert LoadState.from_vector(s.as_vector()).as_vector().tolist() == [1, 2, 0.3, 4, 5, 6]


# -- total wrench ----------------------------------------------------------------


def test_total_wrench_zero():
    p = square_params()
    assert np.array_equal(planar.total_wrench(LoadState(), p, [Wrench2.zero()] * 4), np.zeros(3))


def test_total_wrench_couple():
    p = LoadParams(1.0, 1.0, np.array([[1.0, 0.0], [-1.0, 0.0]]))
    u = planar.total_wrench(LoadState(), p, [Wrench2((0, 1)), Wrench2((0, -1))])
    assert np.allclose(u, [0.0, 0.0, 2.0], atol=0, rtol=0)


@pytest.mark.parametrize("seed", range(5))
def test_total_wrench_matches_grasp_sum(seed):
    params, state, wrenches = random_setup(seed)
    pc = planar.contact_positions(state, params)
    oracle = sum(planar.partial_grasp(pc[i], state.p_C) @ np.r_[w.f, w.tau] for i, w in enumerate(wrenches))
    assert np.allclose(planar.total_wrench(state, params, wrenches), oracle, rtol=1e-12, atol=1e-12)


def test_total_wrench_length_mismatch():
    with pytest.raises(ValueError):
        planar.total_wrench(LoadState(), square_params(), [Wrench2.zero()])


# -- integration -------------------------------------------------------------------


def test_step_free_body():
    p = square_params()
    s = LoadState((0, 0), 0.0, (1.0, -2.0), 0.5)
    out = planar.advance(s, p, [Wrench2.zero()] * 4, 0.01, 100)
    assert np.array_equal(out.v_C, s.v_C) and out.omega == s.omega
    assert np.allclose(out.p_C, [1.0, -2.0], rtol=1e-12)
    assert math.isclose(out.theta, 0.5, rel_tol=1e-12)


def test_force_through_com_does_not_spin():
    # two contacts symmetric about the CoM pushing the same way: no net moment
    p = LoadParams(4.0, 1.0, np.array([[1.0, 0.0], [-1.0, 0.0]]))
    w = [Wrench2((1.0, 0.0)), Wrench2((1.0, 0.0))]
    out = planar.step(LoadState(), p, w, 0.1)
    assert out.omega == 0.0
    assert np.allclose(out.v_C, [0.05, 0.0], rtol=1e-15)


def test_step_rejects_bad_dt_and_state():
    p = square_params()
    with pytest.raises(ValueError):
        planar.step(LoadState(), p, [Wrench2.zero()] * 4, 0.0)
    with pytest.raises(ValueError):
        planar.step(LoadState(omega=math.nan), p, [Wrench2.zero()] * 4, 0.01)


def euler_oracle(state, params, wrenches, T, h):
    # independent fine-step explicit Euler on the world-frame equations
    x = state.as_vector().astype(float)
    r = params.r_contacts
    F = sum(w.f for w in wrenches)
    tau = sum(w.tau for w in wrenches)
    f = np.array([w.f for w in wrenches])
    for _ in range(int(round(T / h))):
        c, s = math.cos(x[2]), math.sin(x[2])
        q = r @ np.array([[c, -s], [s, c]]).T
        torque = float(np.sum(q[:, 0] * f[:, 1] - q[:, 1] * f[:, 0])) + tau
        x = x + h * np.array([x[3], x[4], x[5], F[0] / params.m, F[1] / params.m, torque / params.J])
    return x


@pytest.mark.parametrize("seed", [0, 1])
def test_rk4_matches_fine_euler(seed):
    params, state, wrenches = random_setup(seed, n=3)
    T, dt = 0.25, 1e-3
    out = planar.advance(state, params, wrenches, dt, int(round(T / dt))).as_vector()
    ref = euler_oracle(state, params, wrenches, T, dt / 1000)
    assert np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-6


def test_accelerations_couple():
    p = LoadParams(3.0, 2.0, np.array([[0.0, 1.0], [0.0, -1.0], [2.0, 2.0]]))
    w = [Wrench2((1.0, 0.0)), Wrench2((-1.0, 0.0)), Wrench2.zero()]
    a, alpha = planar.accelerations(LoadState(), p, w)
    assert np.array_equal(a, [0.0, 0.0])
    assert alpha == pytest.approx(-2.0 / 2.0, rel=1e-15)


# -- kinematics and sensing -------------------------------------------------------


def test_contact_velocity_examples():
    p = LoadParams(1.0, 1.0, np.array([[1.0, 0.0], [0.0, 2.0]]))
    s = LoadState((0, 0), 0.0, (0.4, -0.1), 0.0)
    assert np.array_equal(planar.contact_velocity(s, p, 1), [0.4, -0.1])
    s = LoadState((0, 0), 0.0, (0.0, 0.0), 1.0)
    assert np.allclose(planar.contact_velocity(s, p, 0), [0.0, 1.0])
    with pytest.raises(IndexError):
        planar.contact_velocity(s, p, 2)


def test_contact_velocity_matches_finite_difference():
    params, state, _ = random_setup(3)
    h = 1e-6
    zero = [Wrench2.zero()] * params.n
    later = planar.step(state, params, zero, h)
    fd = (planar.contact_positions(later, params) - planar.contact_positions(state, params)) / h
    assert np.allclose(fd, planar.contact_velocities(state, params), atol=1e-4)
    for i in range(params.n):
        assert np.allclose(planar.contact_velocity(state, params, i), planar.contact_velocities(state, params)[i])


def test_measure_velocity_noise_statistics():
    rng = np.random.default_rng(123)
    v = np.zeros((100_000, 2))
    out = planar.measure_velocity(v, 0.3, rng)
    var = out.var(axis=0)
    assert np.all(np.abs(var - 0.09) < 0.05 * 0.09)


def test_measure_velocity_exact_and_deterministic():
    v = np.array([0.1, -0.2])
    assert np.array_equal(planar.measure_velocity(v, 0.0, np.random.default_rng(0)), v)
    a = planar.measure_velocity(v, 0.3, np.random.default_rng(7))
    b = planar.measure_velocity(v, 0.3, np.random.default_rng(7))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        planar.measure_velocity(v, -1.0, np.random.default_rng(0))


# -- invariants ---------------------------------------------------------------------


def test_rigidity_and_com_offset_over_100_s():
    params, state, wrenches = random_setup(4, n=4)
    d0 = np.linalg.norm(planar.contact_positions(state, params)[0] - planar.contact_positions(state, params)[2])
    zc0 = np.linalg.norm(planar.com_offset(state, params))
    s = state
    for _ in range(100):
        s = planar.advance(s, params, wrenches, 1e-3, 1000)
        pc = planar.contact_positions(s, params)
        assert abs(np.linalg.norm(pc[0] - pc[2]) - d0) <= 1e-8 * d0
        assert abs(np.linalg.norm(planar.com_offset(s, params)) - zc0) <= 1e-8 * zc0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(-50, 50))
def test_centroid_offsets_sum_to_zero(seed, theta):
    params, state, _ = random_setup(seed)
    z = planar.centroid_offsets(LoadState(state.p_C, theta), params)
    assert np.allclose(z.sum(axis=0), 0.0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_zero_wrench_preserves_twist(seed):
    params, state, _ = random_setup(seed)
    out = planar.advance(state, params, [Wrench2.zero()] * params.n, 1e-3, 200)
    assert np.array_equal(out.v_C, state.v_C) and out.omega == state.omega


def test_kinetic_energy():
    p = square_params(m=2.0, J=3.0)
    assert planar.kinetic_energy(LoadState((0, 0), 0, (1, 1), 2), p) == pytest.approx(0.5 * (3 * 4 + 2 * 2))
