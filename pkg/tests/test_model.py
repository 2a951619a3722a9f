"""First-order network analysis: traffic, moments, bottleneck, critical level.

Expected values for the tandem instances were computed by hand from the
defining linear systems:

* exponential tandem, means (1, 2), rate 0.7/3 at node 1:
  gamma = (7/30, 7/30), rho = (7/30, 14/30), tau = (3, 2),
  tau2 = (14, 8), E[S] = 3, E[S^2] = 14, m = 7/3.
* same tandem with scv (4, 4): beta2 = (5, 20),
  tau2_2 = 20, tau2_1 = 5 + 2*1*2 + 20 = 29, E[S^2] = 29, m = 29/6.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpsnet import (Exponential, ModelError, NetworkModel, Node,
                    SingularRoutingError, critical_workload, derive,
                    find_bottleneck, fit_two_moments, remaining_work_moments,
                    solve_traffic, tandem, total_service_moments, utilization,
                    validate)

EXP_TANDEM = tandem(0.7 / 3, [Exponential(1.0), Exponential(2.0)], [3, 7])
H2_ROW1 = tandem(0.7 / 3, [fit_two_moments(1.0, 4.0), fit_two_moments(2.0, 4.0)], [3, 7])
H2_ROW2 = tandem(0.7 / 3, [fit_two_moments(1.0, 4.0), fit_two_moments(2.0, 10.0)], [4, 6])


def test_traffic_solution_tandem():
    gamma = solve_traffic(EXP_TANDEM)
    np.testing.assert_allclose(gamma, [0.7 / 3, 0.7 / 3], rtol=1e-14)


def test_traffic_solution_with_feedback():
    # Single node, feedback 0.5: gamma = lambda / (1 - 0.5).
    m = NetworkModel([Node(1.0, Exponential(0.25), 2)], [[0.5]])
    np.testing.assert_allclose(solve_traffic(m), [2.0], rtol=1e-14)


def test_singular_routing_rejected():
    m = NetworkModel([Node(1.0, Exponential(0.1), 1)], [[1.0]])
    with pytest.raises(SingularRoutingError):
        solve_traffic(m)


def test_utilization_tandem():
    rho_i, rho = utilization(EXP_TANDEM)
    np.testing.assert_allclose(rho_i, [0.7 / 3, 1.4 / 3], rtol=1e-14)
    assert rho == pytest.approx(0.7, rel=1e-14)


def test_remaining_work_moments_exponential():
    tau, tau2 = remaining_work_moments(EXP_TANDEM)
    np.testing.assert_allclose(tau, [3.0, 2.0], rtol=1e-14)
    np.testing.assert_allclose(tau2, [14.0, 8.0], rtol=1e-14)


def test_remaining_work_moments_hyperexp():
    tau, tau2 = remaining_work_moments(H2_ROW1)
    np.testing.assert_allclose(tau, [3.0, 2.0], rtol=1e-14)
    np.testing.assert_allclose(tau2, [29.0, 20.0], rtol=1e-14)


def test_total_service_moments():
    es, es2 = total_service_moments(EXP_TANDEM)
    assert es == pytest.approx(3.0, rel=1e-14)
    assert es2 == pytest.approx(14.0, rel=1e-14)
    es, es2 = total_service_moments(H2_ROW1)
    assert es == pytest.approx(3.0, rel=1e-14)
    assert es2 == pytest.approx(29.0, rel=1e-14)


def test_derive_residual_mean():
    assert derive(EXP_TANDEM).residual_mean == pytest.approx(7 / 3, rel=1e-14)
    assert derive(H2_ROW1).residual_mean == pytest.approx(29 / 6, rel=1e-14)


def test_bottleneck_row1_is_first_node():
    # servers/rho: 3/(7/30) = 12.857 < 7/(14/30) = 15.
    b, tie, warnings = find_bottleneck(H2_ROW1)
    assert (b, tie) == (0, False)
    assert warnings == []


def test_bottleneck_row2_is_second_node():
    # servers/rho: 4/(7/30) = 17.14 > 6/(14/30) = 12.857.
    b, tie, _ = find_bottleneck(H2_ROW2)
    assert (b, tie) == (1, False)


def test_bottleneck_tie_flagged_lowest_index():
    # Equal servers/rho at both nodes: rho = (1/4, 1/2), servers (1, 2).
    m = tandem(0.25, [Exponential(1.0), Exponential(2.0)], [1, 2])
    b, tie, _ = find_bottleneck(m)
    assert (b, tie) == (0, True)


def test_bottleneck_ignores_unreached_node():
    # Second node never receives traffic; it must not be selected even
    # though its servers/rho ratio is 0/0.
    m = NetworkModel(
        [Node(0.5, Exponential(1.0), 1), Node(0.0, Exponential(1.0), 1)],
        [[0.0, 0.0], [0.0, 0.0]],
    )
    b, tie, warnings = find_bottleneck(m)
    assert b == 0
    assert any("zero throughput" in w for w in warnings)


def test_critical_workload_row1_value():
    # (1 - 0.7) * 3 * 0.7 * (29/6) / (7/30) = 13.05
    assert critical_workload(H2_ROW1) == pytest.approx(13.05, rel=1e-12)


def test_critical_workload_single_node_reduction():
    # J = 1, K = 1: w* = (1 - rho) * m.
    m = NetworkModel([Node(0.5, fit_two_moments(1.0, 4.0), 1)], [[0.0]])
    s = fit_two_moments(1.0, 4.0)
    expected = 0.5 * s.second_moment / (2 * s.mean)
    assert critical_workload(m) == pytest.approx(expected, rel=1e-12)


def test_critical_workload_linear_in_bottleneck_servers():
    doubled = tandem(0.7 / 3,
                     [fit_two_moments(1.0, 4.0), fit_two_moments(2.0, 4.0)],
                     [6, 7])
    base = critical_workload(H2_ROW1)
    grown = critical_workload(doubled)
    # Doubling the bottleneck server count doubles w* as long as the
    # bottleneck does not move; here it moves to node 2 at 15 < 6/(7/30).
    b, _, _ = find_bottleneck(doubled)
    assert b == 1
    assert grown == pytest.approx(base * (7 / (1.4 / 3)) / (3 / (0.7 / 3)), rel=1e-12)


def test_critical_workload_scales_with_bottleneck_capacity():
    small = tandem(0.25, [Exponential(1.0), Exponential(2.0)], [2, 100])
    large = tandem(0.25, [Exponential(1.0), Exponential(2.0)], [4, 100])
    assert find_bottleneck(small)[0] == 0
    assert find_bottleneck(large)[0] == 0
    assert critical_workload(large) == pytest.approx(2 * critical_workload(small), rel=1e-12)


def test_validate_flags_bad_values():
    m = NetworkModel([Node(-1.0, Exponential(1.0), 1)], [[0.0]])
    assert any("arrival rate" in p for p in validate(m))
    m = NetworkModel([Node(1.0, Exponential(1.0), 0)], [[0.0]])
    assert any("server count" in p for p in validate(m))
    bad_row = NetworkModel([Node(0.1, Exponential(1.0), 1)], [[1.5]])
    assert any("routing" in p for p in validate(bad_row))


def test_validate_warns_on_overload():
    m = NetworkModel([Node(2.0, Exponential(1.0), 1)], [[0.0]])
    assert any(p.startswith("warning:") and "1" in p for p in validate(m))


def test_validate_clean_model():
    assert validate(EXP_TANDEM) == []


def test_derive_rejects_invalid_model():
    m = NetworkModel([Node(-1.0, Exponential(1.0), 1)], [[0.0]])
    with pytest.raises(ModelError):
        derive(m)


def test_network_model_is_immutable():
    with pytest.raises(AttributeError):
        EXP_TANDEM.nodes = ()
    with pytest.raises(ValueError):
        EXP_TANDEM.routing[0, 1] = 0.5


def test_shape_mismatch_rejected():
    with pytest.raises(ModelError):
        NetworkModel([Node(1.0, Exponential(1.0), 1)], [[0.0, 0.0]])


# -- randomized structural properties ---------------------------------------

def _random_model(draw):
    """A random stable exponential-service network (2 to 5 nodes)."""
    J = draw(st.integers(2, 5))
    lam = [draw(st.floats(0.01, 1.0)) for _ in range(J)]
    beta = [draw(st.floats(0.1, 5.0)) for _ in range(J)]
    servers = [draw(st.integers(1, 8)) for _ in range(J)]
    # Substochastic rows with total mass <= 0.9 keep I - P^T well conditioned.
    P = np.zeros((J, J))
    for i in range(J):
        weights = np.array([draw(st.floats(0.0, 1.0)) for _ in range(J)])
        total = weights.sum()
        if total > 0:
            P[i] = weights / total * draw(st.floats(0.0, 0.9))
    nodes = [Node(lam[i], Exponential(beta[i]), servers[i]) for i in range(J)]
    model = NetworkModel(nodes, P)
    # Rescale arrivals so the total load lands strictly below 1.
    _, rho = utilization(model)
    target = draw(st.floats(0.1, 0.95))
    factor = target / rho
    nodes = [Node(lam[i] * factor, Exponential(beta[i]), servers[i]) for i in range(J)]
    return NetworkModel(nodes, P)


@settings(max_examples=120, deadline=None)
@given(st.data())
def test_traffic_equations_residual(data):
    model = _random_model(data.draw)
    gamma = solve_traffic(model)
    residual = gamma - model.arrival_rates - model.routing.T @ gamma
    assert np.max(np.abs(residual)) <= 1e-10 * max(np.max(np.abs(gamma)), 1.0)


@settings(max_examples=120, deadline=None)
@given(st.data())
def test_workload_moment_identity_exponential(data):
    """For exponential service, sum_j rho_j tau_j equals rho * m.

    The identity needs the exponential relation beta2 = 2 beta^2; it is the
    step that rewrites the critical workload in terms of the limiting
    workload mean.
    """
    model = _random_model(data.draw)
    d = derive(model)
    lhs = float(d.rho_per_node @ d.tau)
    rhs = d.rho * d.residual_mean
    assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=120, deadline=None)
@given(st.data())
def test_total_service_jensen(data):
    model = _random_model(data.draw)
    es, es2 = total_service_moments(model)
    assert es2 >= es**2 * (1 - 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.data(), st.floats(0.2, 0.99))
def test_bottleneck_invariant_under_load_scaling(data, shrink):
    model = _random_model(data.draw)
    b, _, _ = find_bottleneck(model)
    scaled = NetworkModel(
        [Node(n.arrival_rate * shrink, n.service, n.servers) for n in model.nodes],
        model.routing,
    )
    assert find_bottleneck(scaled)[0] == b


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_entry_mix_sums_to_one(data):
    model = _random_model(data.draw)
    d = derive(model)
    assert float(d.entry_mix.sum()) == pytest.approx(1.0, abs=1e-12)
    assert d.mean_total_service == pytest.approx(float(d.entry_mix @ d.tau), rel=1e-12)
