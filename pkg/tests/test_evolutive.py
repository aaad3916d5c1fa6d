import numpy as np
import pytest

from mfgpi.errors import MaxIterationsExceeded
from mfgpi.evolutive import (
    EvolutiveProblem,
    fp_forward_sweep,
    hjb_backward_sweep,
    merge_policy_for_output,
    policy_distance,
    policy_iteration_evolutive,
)
from mfgpi.grid import PeriodicGrid, TimeGrid, quadrature
from mfgpi.operators import assemble_fp_matrix, discrete_laplacian, policy_half_norm_sq, two_sided_gradient
from mfgpi.presets import builtin_coupling, builtin_initial_data, builtin_potential, gaussian_density
from mfgpi.stationary import PiConfig


def make(nodes=8, steps=4, dim=1, potential=None, coupling="square", m0=None, u_final=None, horizon=1.0):
    g = PeriodicGrid(dim, nodes)
    zeros = np.zeros(g.size)
    return EvolutiveProblem(
        g,
        TimeGrid(horizon, steps),
        0.3,
        zeros if potential is None else potential,
        builtin_coupling(coupling),
        np.ones(g.size) if m0 is None else m0,
        zeros if u_final is None else u_final,
    )


def random_policies(p, seed, scale=3.0):
    return np.random.default_rng(seed).normal(scale=scale, size=p.policy_shape)


# --- sweeps --------------------------------------------------------------


def test_forward_sweep_without_policy_is_heat_flow():
    g = PeriodicGrid(1, 16)
    m0 = gaussian_density(g)
    p = make(nodes=16, steps=5, m0=m0)
    m = fp_forward_sweep(np.zeros(p.policy_shape), p)
    lap = np.column_stack([discrete_laplacian(e, g) for e in np.eye(16)])
    expected = m0.copy()
    for n in range(5):
        expected = np.linalg.solve(np.eye(16) - p.time.dt * 0.3 * lap, expected)
        np.testing.assert_allclose(m[n + 1], expected, atol=1e-12)


def test_backward_sweep_constant_cost():
    p = make(nodes=8, steps=4, coupling="zero", potential=np.full(8, 2.0))
    u = hjb_backward_sweep(np.zeros(p.policy_shape), np.ones((5, 8)), p)
    for n, t in enumerate(p.time.times):
        np.testing.assert_allclose(u[n], 2.0 * (1.0 - t), atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_forward_sweep_against_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    m0 = rng.uniform(0.2, 1.8, 8)
    p = make(m0=m0 / quadrature(m0, PeriodicGrid(1, 8)))
    q = random_policies(p, seed)
    m = fp_forward_sweep(q, p)
    cur = p.m0
    for n in range(4):
        a = assemble_fp_matrix(q[n + 1], 0.3, p.grid).toarray()
        cur = np.linalg.solve(np.eye(8) + p.time.dt * a, cur)
        np.testing.assert_allclose(m[n + 1], cur, atol=1e-10)
        assert quadrature(m[n + 1], p.grid) == pytest.approx(1.0, abs=1e-12)
        assert m[n + 1].min() >= 0


@pytest.mark.parametrize("cost_at_next", [True, False])
def test_backward_sweep_against_dense_oracle(cost_at_next):
    rng = np.random.default_rng(7)
    g = PeriodicGrid(1, 8)
    p = make(potential=rng.normal(size=8), u_final=rng.normal(size=8))
    q = random_policies(p, 3)
    m = rng.uniform(0.5, 1.5, size=(5, 8))
    u = hjb_backward_sweep(q, m, p, cost_at_next)
    cur = p.u_final
    for n in range(3, -1, -1):
        a_t = assemble_fp_matrix(q[n], 0.3, g).toarray().T
        qc = q[n + 1] if cost_at_next else q[n]
        rhs = cur + p.time.dt * (policy_half_norm_sq(qc) + p.potential + m[n + 1] ** 2)
        cur = np.linalg.solve(np.eye(8) + p.time.dt * a_t, rhs)
        np.testing.assert_allclose(u[n], cur, atol=1e-10)


def test_policy_distance():
    g = PeriodicGrid(1, 4)
    a = np.zeros((3, 4, 2))
    b = a.copy()
    b[1, 0, 0] = 2.0
    assert policy_distance(b, a, g) == pytest.approx(1.0)
    assert policy_distance(a, a, g) == 0.0


# --- policy iteration ----------------------------------------------------


@pytest.mark.parametrize("cost_at_next", [True, False])
def test_trivial_problem_converges_at_once(cost_at_next):
    p = make(nodes=10, steps=5, coupling="zero")
    state, conv = policy_iteration_evolutive(p, cost_at_next=cost_at_next)
    assert conv.iterations <= 2
    np.testing.assert_allclose(state.m, 1.0, atol=1e-12)
    np.testing.assert_allclose(state.u, 0.0, atol=1e-12)


def reflect(values, nodes):
    return values[..., (-np.arange(nodes)) % nodes]


def test_reflection_symmetry():
    g = PeriodicGrid(1, 16)
    x = g.coords[:, 0]
    v = np.cos(2 * np.pi * x) + 0.5 * np.cos(4 * np.pi * x)
    m0 = 1.0 + 0.5 * np.cos(2 * np.pi * x)
    p = make(nodes=16, steps=8, potential=v, m0=m0 / quadrature(m0, g), u_final=np.sin(np.pi * x) ** 2)
    state, _ = policy_iteration_evolutive(p, cost_at_next=False)
    np.testing.assert_allclose(state.m, reflect(state.m, 16), atol=1e-8)
    np.testing.assert_allclose(state.u, reflect(state.u, 16), atol=1e-8)


@pytest.mark.parametrize("cost_at_next", [True, False])
def test_fixed_point_consistency(cost_at_next):
    g = PeriodicGrid(1, 12)
    x = g.coords[:, 0]
    m0 = gaussian_density(g, width=10)
    p = make(nodes=12, steps=6, potential=np.sin(2 * np.pi * x), m0=m0)
    state, conv = policy_iteration_evolutive(p, cfg=PiConfig(tol=1e-12, max_outer=500), cost_at_next=cost_at_next)
    assert conv.final_metric < 1e-12
    # the returned policy is the feedback of the returned values
    for n in range(7):
        np.testing.assert_allclose(state.q[n], two_sided_gradient(state.u[n], g))
    np.testing.assert_allclose(fp_forward_sweep(state.q, p), state.m, atol=1e-5)
    np.testing.assert_allclose(hjb_backward_sweep(state.q, state.m, p, cost_at_next), state.u, atol=1e-5)


def test_values_decrease_monotonically_without_coupling():
    # with F = 0 the density does not feed back, and each backward sweep
    # evaluates a fixed feedback, so successive values can only go down
    g = PeriodicGrid(1, 20)
    x = g.coords[:, 0]
    p = make(nodes=20, steps=10, coupling="zero", potential=np.sin(2 * np.pi * x), u_final=np.cos(2 * np.pi * x))
    values = []
    policy_iteration_evolutive(p, cfg=PiConfig(tol=1e-14, max_outer=50), callback=lambda k, s: values.append(s.u))
    assert len(values) > 2
    for prev, cur in zip(values[1:], values[2:]):
        assert np.all(cur <= prev + 1e-10)


def test_mass_and_sign_every_iteration():
    g = PeriodicGrid(2, 8)
    m0, u_final = builtin_initial_data("paper-gaussian", g)
    p = EvolutiveProblem(
        g, TimeGrid(1.0, 10), 0.3, builtin_potential("paper-2d", g), builtin_coupling("square"), m0, u_final
    )

    def check(k, state):
        for mn in state.m:
            assert abs(quadrature(mn, g) - 1) <= 1e-12
            assert mn.min() >= -1e-12

    _, conv = policy_iteration_evolutive(p, callback=check, cost_at_next=False)
    assert conv.final_metric < 1e-8


def test_exhaustion_reports_state():
    g = PeriodicGrid(1, 12)
    p = make(nodes=12, steps=6, potential=np.sin(2 * np.pi * g.coords[:, 0]), m0=gaussian_density(g, width=10))
    with pytest.raises(MaxIterationsExceeded) as info:
        policy_iteration_evolutive(p, cfg=PiConfig(max_outer=2))
    assert info.value.log.iterations == 2
    assert info.value.state.u.shape == (7, 12)


def test_rejects_bad_initial_density():
    with pytest.raises(ValueError):
        make(m0=np.full(8, 2.0))


def test_rejects_policy_shape():
    p = make()
    with pytest.raises(ValueError):
        fp_forward_sweep(np.zeros((4, 8, 2)), p)


# --- presets and output --------------------------------------------------


def test_gaussian_is_normalized_and_centered():
    g = PeriodicGrid(2, 20)
    m = gaussian_density(g)
    assert quadrature(m, g) == pytest.approx(1.0, abs=1e-14)
    assert tuple(g.multi_index[np.argmax(m)]) == (10, 10)


def test_merge_policy_for_output():
    q = np.zeros((3, 4, 4))
    q[..., 0], q[..., 1], q[..., 2], q[..., 3] = 2.0, -1.0, 0.5, 0.25
    merged = merge_policy_for_output(q[1])
    np.testing.assert_allclose(merged, np.tile([1.0, 0.75], (4, 1)))
