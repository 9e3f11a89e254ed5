import numpy as np
import pytest

from dagrca.errors import ContractError
from dagrca.evaluation.synthetic import (PROFILES, TrueDag, canonical_profile,
                                         fault_signal, generate_random_dag, inject_fault,
                                         make_case, simulate_sem)
from dagrca.graph import has_cycle


def test_edge_probability_extremes():
    assert not generate_random_dag(5, 0.0, seed=1).weights.any()
    d = generate_random_dag(3, 1.0, seed=2)
    assert d.binary.sum() == 3
    ordered = d.weights[np.ix_(d.order, d.order)]
    assert np.all(ordered[np.triu_indices(3, 1)] != 0) and not np.tril(ordered).any()


def test_weights_in_range_and_signed():
    d = generate_random_dag(10, 0.6, seed=3)
    mags = np.abs(d.weights[d.weights != 0])
    assert np.all((mags >= 0.5) & (mags <= 2.0))
    assert (d.weights > 0).any() and (d.weights < 0).any()


def test_dags_are_acyclic_over_many_seeds():
    for seed in range(1000):
        d = generate_random_dag(8, 0.5, seed=seed)
        assert not has_cycle(d.weights != 0)


def test_dag_argument_errors():
    for args in ((1, 0.3), (4, 1.5), (4, -0.1)):
        with pytest.raises(ContractError):
            generate_random_dag(*args)
    with pytest.raises(ContractError):
        generate_random_dag(4, 0.3, weight_range=(2.0, 1.0))


def test_empty_dag_gives_independent_noise():
    X = simulate_sem(generate_random_dag(5, 0.0), 1000, seed=4).data
    C = np.corrcoef(X.T)
    assert np.all(np.abs(C[~np.eye(5, dtype=bool)]) < 0.1)
    assert np.all(np.abs(X.mean(axis=0)) < 3 / np.sqrt(1000))


def test_chain_variance_propagates():
    W = np.array([[0.0, 2.0], [0.0, 0.0]])
    X = simulate_sem(TrueDag(W, (0, 1)), 5000, seed=5).data
    assert abs(X[:, 1].var() / 5.0 - 1) < 0.15
    assert abs(X[:, 0].var() - 1) < 0.15


def test_simulation_is_deterministic_and_rejects_cycles():
    d = generate_random_dag(6, 0.4, seed=6)
    np.testing.assert_array_equal(simulate_sem(d, 50, seed=1).data, simulate_sem(d, 50, seed=1).data)
    assert not np.array_equal(simulate_sem(d, 50, seed=1).data, simulate_sem(d, 50, seed=2).data)
    with pytest.raises(ContractError):
        simulate_sem(np.array([[0, 1.0], [1.0, 0]]), 10)


def test_profile_names():
    assert canonical_profile("cpu-hog") == "step"
    assert canonical_profile("memory-leak") == "ramp"
    assert canonical_profile("network-delay") == "variance"
    with pytest.raises(ContractError, match="unknown"):
        canonical_profile("disk-full")


def test_fault_signal_shapes():
    np.testing.assert_array_equal(fault_signal("step", 6, 3, 2.0), [0, 0, 0, 2, 2, 2])
    np.testing.assert_allclose(fault_signal("ramp", 6, 2, 1.0), [0, 0, 0.5, 1.0, 1.5, 2.0])
    assert not fault_signal("step", 4, 4, 2.0).any()
    with pytest.raises(ContractError):
        fault_signal("variance", 4, 1, 1.0)


def chain3():
    W = np.zeros((3, 3))
    W[0, 1], W[1, 2] = 2.0, -0.5
    return TrueDag(W, (0, 1, 2))


def test_step_fault_shifts_descendants_by_path_product():
    dag = chain3()
    frame = simulate_sem(dag, 200, seed=7)
    case = inject_fault(frame, dag, 0, "step", onset_fraction=0.5, magnitude=3.0)
    shift = case.frame.data[100:] - frame.data[100:]
    np.testing.assert_allclose(shift, np.tile([3.0, 6.0, -3.0], (100, 1)), atol=1e-12)


@pytest.mark.parametrize("profile", PROFILES)
def test_pre_onset_rows_bit_identical(profile):
    dag = generate_random_dag(6, 0.5, seed=8)
    frame = simulate_sem(dag, 100, seed=8)
    case = inject_fault(frame, dag, 2, profile, onset_fraction=0.3)
    assert case.onset_index == 30
    np.testing.assert_array_equal(case.frame.data[:30], frame.data[:30])
    assert np.array_equal(inject_fault(frame, dag, 2, profile, 1.0).frame.data, frame.data)


def test_variance_fault_inflates_variance():
    for seed in range(10):
        dag = generate_random_dag(5, 0.3, seed=seed)
        frame = simulate_sem(dag, 300, seed=seed)
        x = inject_fault(frame, dag, 0, "variance", seed=seed).frame.data[:, 0]
        assert x[150:].var() >= 2 * x[:150].var()


def test_inject_fault_errors():
    dag = chain3()
    frame = simulate_sem(dag, 10)
    with pytest.raises(ContractError):
        inject_fault(frame, dag, 3, "step")
    with pytest.raises(ContractError):
        inject_fault(frame, dag, 0, "bogus")


def test_make_case_picks_a_node_with_children():
    for seed in range(20):
        case = make_case(m=8, n=50, seed=seed)
        assert case.dag.descendants(case.fault_node)
        assert case.fault_id == case.frame.metric_ids[case.fault_node]
    a, b = make_case(seed=3, n=40), make_case(seed=3, n=40)
    np.testing.assert_array_equal(a.frame.data, b.frame.data)
