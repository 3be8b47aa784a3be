import numpy as np
import pytest

from hybridbench.statevector import (
    AnsatzSpec,
    CircuitError,
    Gate,
    apply_gate,
    expectation_z,
    init_zero,
    probabilities,
    run_circuit,
)

from oracles import circuit_state, random_gates


def run(gates, n):
    state = init_zero(n)
    for g in gates:
        state = apply_gate(state, g)
    return state


def test_init_zero():
    np.testing.assert_array_equal(init_zero(1).amplitudes, [1, 0])
    np.testing.assert_array_equal(init_zero(2).amplitudes, [1, 0, 0, 0])


@pytest.mark.parametrize("n", [0, 31, -1])
def test_init_zero_rejects_bad_counts(n):
    with pytest.raises(CircuitError):
        init_zero(n)


def test_basic_gates():
    s = apply_gate(init_zero(1), Gate("H", 0))
    np.testing.assert_allclose(s.amplitudes, [2**-0.5, 2**-0.5], atol=1e-15)
    s = apply_gate(init_zero(1), Gate("RY", 0, angle=np.pi))
    np.testing.assert_allclose(s.amplitudes, [0, 1], atol=1e-15)
    # |10>: qubit 1 set, index 2
    s = apply_gate(init_zero(2), Gate("RY", 1, angle=np.pi))
    s = apply_gate(s, Gate("CNOT", 0, 1))
    np.testing.assert_allclose(np.abs(s.amplitudes), [0, 0, 0, 1], atol=1e-15)


@pytest.mark.parametrize("gate", [
    Gate("CNOT", 0),
    Gate("CNOT", 1, 1),
    Gate("H", 2),
    Gate("RX", 0),
    Gate("RZ", 0, angle=np.inf),
    Gate("SWAP", 0, 1),
])
def test_invalid_gates(gate):
    with pytest.raises(CircuitError):
        apply_gate(init_zero(2), gate)


def test_hadamard_wall_gives_uniform_state():
    s = run_circuit(AnsatzSpec(2, 1), [0.0, 0.0])
    np.testing.assert_allclose(s.amplitudes, [0.5] * 4, atol=1e-15)


def test_param_count_mismatch():
    with pytest.raises(CircuitError):
        run_circuit(AnsatzSpec(3, 2), np.zeros(5))


def test_ansatz_matches_dense_unitaries():
    ansatz = AnsatzSpec(3, 2)
    theta = np.random.default_rng(7).uniform(0, 2 * np.pi, ansatz.num_params)
    state = run_circuit(ansatz, theta)
    np.testing.assert_allclose(state.amplitudes, circuit_state(ansatz.gates(theta), 3), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_random_circuits_match_dense_oracle(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(5):
        gates = random_gates(n, 40, rng)
        np.testing.assert_allclose(run(gates, n).amplitudes, circuit_state(gates, n), rtol=0, atol=1e-12)


def test_norm_preserved_on_ten_qubits():
    rng = np.random.default_rng(1)
    for _ in range(3):
        state = run(random_gates(10, 100, rng), 10)
        assert abs(state.norm() - 1) <= 1e-10


def test_probabilities_and_expectations():
    s = apply_gate(apply_gate(init_zero(2), Gate("H", 0)), Gate("H", 1))
    np.testing.assert_allclose(probabilities(s), [0.25] * 4, atol=1e-15)
    np.testing.assert_array_equal(probabilities(init_zero(1)), [1, 0])
    s = apply_gate(init_zero(1), Gate("RY", 0, angle=1.0))
    np.testing.assert_allclose(probabilities(s), [np.cos(0.5) ** 2, np.sin(0.5) ** 2], atol=1e-15)

    assert expectation_z(init_zero(1), 0) == 1.0
    assert abs(expectation_z(apply_gate(init_zero(1), Gate("H", 0)), 0)) < 1e-12
    s = apply_gate(init_zero(1), Gate("RY", 0, angle=0.7))
    assert expectation_z(s, 0) == pytest.approx(np.cos(0.7), abs=1e-14)
    with pytest.raises(CircuitError):
        expectation_z(s, 1)


def test_expectation_in_range_and_probabilities_sum():
    state = run(random_gates(5, 60, np.random.default_rng(3)), 5)
    assert probabilities(state).sum() == pytest.approx(1.0, abs=1e-10)
    for q in range(5):
        assert -1 <= expectation_z(state, q) <= 1


def test_deterministic():
    gates = random_gates(6, 50, np.random.default_rng(9))
    a, b = run(gates, 6), run(gates, 6)
    assert a.amplitudes.tobytes() == b.amplitudes.tobytes()


def test_state_is_immutable():
    s = init_zero(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
