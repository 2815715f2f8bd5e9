import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochcut import dynamics
from stochcut.basis import default_basis
from stochcut.cem import CemConfig
from stochcut.errors import EmptySampleError
from stochcut.lstd import (LstdAccumulator, TransitionSample, absorb, evaluate_policy,
                           exact_accumulator, solve, solve_detailed)
from stochcut.rng import RngStream

import oracles
from conftest import micro_instance, one_hot_pairs


def test_single_update_example():
    acc = LstdAccumulator(1, 0.5)
    absorb(acc, TransitionSample(np.array([2.0]), np.array([1.0]), 3.0))
    assert acc.A_hat[0, 0] == 3.0 and acc.b_hat[0] == 6.0 and acc.count == 1
    assert solve(acc)[0] == pytest.approx(2.0)


def test_zero_features_change_nothing():
    acc = LstdAccumulator(3, 0.9)
    acc.absorb(TransitionSample(np.zeros(3), np.ones(3), 5.0))
    assert not acc.A_hat.any() and not acc.b_hat.any()
    sol = solve_detailed(acc)
    assert sol.path == "pinv" and np.all(sol.theta == 0.0)


def test_empty_accumulator():
    with pytest.raises(EmptySampleError):
        solve(LstdAccumulator(2, 0.5))


def test_gamma_range():
    with pytest.raises(ValueError):
        LstdAccumulator(1, 1.0)
    LstdAccumulator(1, 0.0)


def test_two_state_tabular_chain():
    # states a, b; one action; P = [[0.2, 0.8], [0.6, 0.4]]; costs 1 and 4
    P = np.array([[0.2, 0.8], [0.6, 0.4]])
    c = np.array([1.0, 4.0])
    gamma = 0.9
    acc = LstdAccumulator(2, gamma)
    eye = np.eye(2)
    for k in range(2):
        acc.absorb(TransitionSample(eye[k], P[k] @ eye, c[k]))
    q = np.linalg.solve(np.eye(2) - gamma * P, c)
    np.testing.assert_allclose(solve(acc), q, atol=1e-12)


def test_zero_discount_is_least_squares():
    rs = np.random.default_rng(0)
    phi = rs.normal(size=(50, 4))
    costs = rs.normal(size=50)
    acc = LstdAccumulator(4, 0.0).absorb_batch(phi, rs.normal(size=(50, 4)), costs)
    ols = np.linalg.lstsq(phi, costs, rcond=None)[0]
    np.testing.assert_allclose(solve(acc), ols, atol=1e-10)


@given(st.floats(0.1, 100.0), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_cost_scale_equivariance(scale, seed):
    rs = np.random.default_rng(seed)
    phi, nxt, costs = rs.normal(size=(30, 3)), rs.normal(size=(30, 3)), rs.normal(size=30)
    base = solve(LstdAccumulator(3, 0.7).absorb_batch(phi, nxt, costs))
    scaled = solve(LstdAccumulator(3, 0.7).absorb_batch(phi, nxt, scale * costs))
    np.testing.assert_allclose(scaled, scale * base, rtol=1e-8, atol=1e-10)


def test_streaming_equals_batch_and_merge():
    rs = np.random.default_rng(1)
    phi, nxt, costs = rs.normal(size=(40, 3)), rs.normal(size=(40, 3)), rs.normal(size=40)
    stream = LstdAccumulator(3, 0.8)
    for k in range(40):
        stream.absorb(TransitionSample(phi[k], nxt[k], costs[k]))
    batch = LstdAccumulator(3, 0.8).absorb_batch(phi, nxt, costs)
    halves = LstdAccumulator(3, 0.8).absorb_batch(phi[:15], nxt[:15], costs[:15])
    halves.merge(LstdAccumulator(3, 0.8).absorb_batch(phi[15:], nxt[15:], costs[15:]))
    np.testing.assert_allclose(stream.A_hat, batch.A_hat, atol=1e-12)
    np.testing.assert_allclose(halves.b_hat, batch.b_hat, atol=1e-12)
    assert halves.count == stream.count == 40
    with pytest.raises(ValueError):
        halves.merge(LstdAccumulator(3, 0.5))


def test_solution_satisfies_system():
    rs = np.random.default_rng(2)
    acc = LstdAccumulator(5, 0.6).absorb_batch(rs.normal(size=(60, 5)),
                                                rs.normal(size=(60, 5)), rs.normal(size=60))
    sol = solve_detailed(acc)
    assert sol.path == "exact"
    assert np.linalg.norm(acc.A_hat @ sol.theta - acc.b_hat) <= 1e-8 * np.linalg.norm(acc.b_hat)


def test_ridge_shrinks():
    acc = LstdAccumulator(2, 0.5)
    acc.absorb(TransitionSample(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 2.0))
    free = solve(acc)
    ridged = solve(acc, ridge=1.0)
    assert free[0] == pytest.approx(2.0)
    assert ridged[0] == pytest.approx(1.0)


def _fixed_policy(inst):
    # cut one object of the pattern that helps the emptier item, if it fits
    def pi(s):
        s = np.asarray(s)
        j = int(np.argmin(s))
        x = np.zeros(inst.n, dtype=np.int64)
        x[j] = 1
        return x if dynamics.is_feasible(inst, s, x) else np.zeros(inst.n, dtype=np.int64)
    return pi


def test_exact_feed_recovers_tabular_q():
    inst = micro_instance()
    pi = _fixed_policy(inst)
    pairs, index, feat = one_hot_pairs(inst)
    acc = exact_accumulator(inst, feat, pi, 0.8)
    theta = solve(acc)
    law = oracles.demand_law([0.5, 0.5], 0, 2)
    a = inst.a.tolist()
    ref_pairs, q = oracles.tabular_q(a, inst.costs.g, inst.costs.h_plus, inst.costs.h_minus,
                                     3, 2, law, pi, 0.8)
    assert ref_pairs == pairs
    assert np.max(np.abs(theta - q)) <= 1e-6


def test_evaluate_policy_deterministic(steel):
    spec = default_basis(steel, "polynomial")
    cfg = CemConfig(n_iterations=2, n_candidates=10)
    theta = np.zeros(spec.K)
    one = evaluate_policy(steel, spec, theta, 0.8, 3, RngStream(5), cfg, chunk=2)
    two = evaluate_policy(steel, spec, theta, 0.8, 3, RngStream(5), cfg, chunk=2, threads=2)
    np.testing.assert_array_equal(one.theta, two.theta)
    assert one.count == 3 and np.isfinite(one.mean_cost)
    single = evaluate_policy(steel, spec, theta, 0.8, 1, RngStream(5), cfg)
    again = evaluate_policy(steel, spec, theta, 0.8, 1, RngStream(5), cfg)
    np.testing.assert_array_equal(single.theta, again.theta)
