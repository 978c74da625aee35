import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdsim.qcore import (
    BELL,
    BELL_KINDS,
    CNOT,
    GATES,
    GHZ_KINDS,
    I_SIGMA_Y,
    MAX_QUBITS,
    SIGMA_X,
    SIGMA_Z,
    U_EX,
    X,
    Z,
    ZZ,
    Gate,
    ParticleLabel,
    QubitPool,
    StateVector,
    apply_gate,
    equal_up_to_global_phase,
    identify,
    measure,
    outcome_probabilities,
    prepare_basis,
    prepare_bell,
    prepare_ghz4,
    prepare_single,
    prepare_w,
    product,
    rng_streams,
    schmidt_rank,
)

S = 1 / np.sqrt(2)
AB = ("a", "b")


def ket(bits):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def state(labels, amps):
    return StateVector(tuple(labels), np.asarray(amps, dtype=complex))


def embed(matrix, targets, n):
    """Full 2^n operator for ``matrix`` acting on qubit positions ``targets``.

    Built by summing over matrix elements with explicit basis projectors,
    independently of the tensordot path used by apply_gate.
    """
    k = len(targets)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - i)) & 1 for i in range(n)]
        sub_in = int("".join(str(bits[t]) for t in targets), 2)
        for sub_out in range(2**k):
            amp = matrix[sub_out, sub_in]
            if amp == 0:
                continue
            out = list(bits)
            for j, t in enumerate(targets):
                out[t] = (sub_out >> (k - 1 - j)) & 1
            full[int("".join(map(str, out)), 2), col] += amp
    return full


@st.composite
def random_state(draw, min_qubits=1, max_qubits=MAX_QUBITS):
    n = draw(st.integers(min_qubits, max_qubits))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return state([f"q{i}" for i in range(n)], amps / np.linalg.norm(amps))


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            state(AB, [1, 1, 0, 0])

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError):
            state(("a", "a"), ket("00"))

    def test_rejects_too_many_qubits(self):
        labels = [f"q{i}" for i in range(MAX_QUBITS + 1)]
        with pytest.raises(ValueError):
            state(labels, ket("0" * len(labels)))

    def test_first_label_is_leftmost(self):
        s = prepare_basis("01", AB)
        assert s.amplitude("01") == 1
        assert s.reorder(("b", "a")).amplitude("10") == 1

    def test_kron_rejects_shared_labels(self):
        with pytest.raises(ValueError):
            prepare_single("0", "a").kron(prepare_single("1", "a"))

    def test_particle_label_text(self):
        assert str(ParticleLabel(3, "a")) == "a3"
        assert str(ParticleLabel(0, "b", "check")) == "check:b0"
        with pytest.raises(ValueError):
            ParticleLabel(0, "e")


class TestPreparation:
    def test_bell_states_by_hand(self):
        expected = {
            "phi+": [S, 0, 0, S],
            "phi-": [S, 0, 0, -S],
            "psi+": [0, S, S, 0],
            "psi-": [0, S, -S, 0],
        }
        for kind, amps in expected.items():
            assert np.allclose(prepare_bell(kind, AB).amps, amps)

    def test_typographic_minus_alias(self):
        assert np.allclose(prepare_bell("psi−", AB).amps, prepare_bell("psi-", AB).amps)
        assert np.allclose(prepare_single("−", "a").amps, [S, -S])

    def test_w_state_amplitudes(self):
        w = prepare_w(("a", "b", "c"))
        expected = (ket("001") + ket("010") - ket("100") + ket("111")) / 2
        assert np.allclose(w.amps, expected)
        assert np.isclose(np.linalg.norm(w.amps), 1)

    def test_w_bell_decomposition(self):
        # |W> = (|0>_a |psi+>_bc + |1>_a |phi->_bc) / sqrt(2), up to the a-sign convention.
        w = prepare_w(("a", "b", "c"))
        for a_bit in "01":
            branch = measure(w, ["a"], Z, None, force=a_bit)
            assert np.isclose(branch.probability, 0.5)

    def test_ghz_states(self):
        labels = ("a", "b", "c", "d")
        expected = {
            "G1": (ket("0000") + ket("1111")) * S,
            "G2": (ket("0001") - ket("1110")) * S,
            "G3": (ket("0101") + ket("1010")) * S,
            "G4": (ket("0100") - ket("1011")) * S,
        }
        for kind in GHZ_KINDS:
            assert np.allclose(prepare_ghz4(kind, labels).amps, expected[kind])


class TestGates:
    def test_all_gates_unitary(self):
        for gate in GATES.values():
            m = gate.matrix
            assert np.allclose(m.conj().T @ m, np.eye(len(m)))

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            Gate("bad", [[1, 1], [0, 1]])

    def test_exchange_is_involution(self):
        assert np.allclose(U_EX.matrix @ U_EX.matrix, np.eye(4))

    def test_i_sigma_y_matrix(self):
        assert np.allclose(I_SIGMA_Y.matrix, SIGMA_Z.matrix @ SIGMA_X.matrix)

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            apply_gate(prepare_basis("00", AB), CNOT, ["a"])

    @settings(max_examples=60, deadline=None)
    @given(random_state(min_qubits=2), st.data())
    def test_two_qubit_gate_matches_full_operator(self, s, data):
        gate = data.draw(st.sampled_from([CNOT, U_EX]))
        pos = data.draw(st.permutations(range(s.n_qubits)))[:2]
        out = apply_gate(s, gate, [s.labels[p] for p in pos])
        assert out.labels == s.labels
        assert np.allclose(out.amps, embed(gate.matrix, pos, s.n_qubits) @ s.amps)

    @settings(max_examples=60, deadline=None)
    @given(random_state(), st.data())
    def test_one_qubit_gate_matches_full_operator(self, s, data):
        gate = data.draw(st.sampled_from([SIGMA_X, SIGMA_Z, I_SIGMA_Y]))
        pos = data.draw(st.integers(0, s.n_qubits - 1))
        out = apply_gate(s, gate, [s.labels[pos]])
        assert np.allclose(out.amps, embed(gate.matrix, [pos], s.n_qubits) @ s.amps)

    @settings(max_examples=40, deadline=None)
    @given(random_state(min_qubits=2))
    def test_gates_preserve_norm(self, s):
        out = apply_gate(s, CNOT, s.labels[:2])
        assert np.isclose(np.linalg.norm(out.amps), 1)


class TestPauliBell:
    def test_paulis_permute_bell_basis(self):
        # Each Pauli on one half maps the Bell basis onto itself bijectively.
        for gate in (SIGMA_X, SIGMA_Z, I_SIGMA_Y):
            for side in AB:
                images = {identify(apply_gate(prepare_bell(k, AB), gate, [side]), BELL) for k in BELL_KINDS}
                assert images == set(BELL_KINDS)

    def test_cnot_collapses_bell_to_product(self):
        for kind in BELL_KINDS:
            out = apply_gate(prepare_bell(kind, AB), CNOT, AB)
            assert schmidt_rank(out, ["a"]) == 1
            assert schmidt_rank(prepare_bell(kind, AB), ["a"]) == 2

    def test_w_schmidt_ranks(self):
        w = prepare_w(("a", "b", "c"))
        assert schmidt_rank(w, ["a"]) == 2
        assert schmidt_rank(apply_gate(w, U_EX, ["a", "b"]), ["a"]) == 2


class TestMeasurement:
    def test_bell_measurement_of_eigenstate(self):
        for kind in BELL_KINDS:
            out = measure(prepare_bell(kind, AB), AB, BELL, np.random.default_rng(0))
            assert out.index == kind
            assert np.isclose(out.probability, 1)
            assert out.collapsed.n_qubits == 0

    def test_probabilities_sum_to_one(self):
        w = prepare_w(("a", "b", "c"))
        for basis, targets in ((Z, ["a"]), (X, ["b"]), (BELL, ["b", "c"]), (ZZ, ["a", "c"])):
            assert np.isclose(sum(outcome_probabilities(w, targets, basis).values()), 1)

    def test_collapse_of_entangled_partner(self):
        out = measure(prepare_bell("psi-", AB), ["a"], Z, None, force="1")
        assert equal_up_to_global_phase(out.collapsed, prepare_single("0", "b"))

    def test_forced_impossible_outcome(self):
        with pytest.raises(ValueError):
            measure(prepare_single("0", "a"), ["a"], Z, None, force="1")

    def test_rng_required(self):
        with pytest.raises(ValueError):
            measure(prepare_single("+", "a"), ["a"], Z, None)

    def test_born_frequencies(self):
        rng = np.random.default_rng(11)
        s = state(["a"], [np.sqrt(0.3), np.sqrt(0.7)])
        trials = 100_000
        ones = sum(measure(s, ["a"], Z, rng).index == "1" for _ in range(trials))
        sigma = np.sqrt(0.7 * 0.3 / trials)
        assert abs(ones / trials - 0.7) < 3 * sigma

    def test_global_phase(self):
        s = prepare_bell("phi+", AB)
        assert equal_up_to_global_phase(s, StateVector(AB, 1j * s.amps))
        assert not equal_up_to_global_phase(s, prepare_bell("phi-", AB))
        with pytest.raises(ValueError):
            equal_up_to_global_phase(s, prepare_bell("phi+", ("a", "c")))


class TestQubitPool:
    def test_merge_on_gate(self):
        pool = QubitPool([prepare_single("+", "a"), prepare_single("0", "b")])
        pool.apply(CNOT, ["a", "b"])
        assert equal_up_to_global_phase(pool.to_state(AB), prepare_bell("phi+", AB))

    def test_path_probability(self):
        pool = QubitPool([prepare_single("+", "a"), prepare_single("+", "b")])
        pool.measure(["a"], Z, np.random.default_rng(0))
        pool.measure(["b"], Z, np.random.default_rng(0))
        assert np.isclose(pool.path_probability, 0.25)

    def test_many_qubits_beyond_register_limit(self):
        pool = QubitPool(prepare_bell("phi+", (f"a{i}", f"b{i}")) for i in range(10))
        assert len(pool.labels) == 20
        with pytest.raises(ValueError):
            pool.add(prepare_single("0", "a0"))

    def test_product_matches_kron(self):
        states = [prepare_single(s, f"q{i}") for i, s in enumerate("0+1")]
        expected = reduce(np.kron, [s.amps for s in states])
        assert np.allclose(product(states).amps, expected)


def test_rng_streams_are_reproducible_and_distinct():
    a, b = rng_streams(5), rng_streams(5)
    draws = {name: a[name].random() for name in a}
    assert draws == {name: b[name].random() for name in b}
    assert len(set(draws.values())) == len(draws)
    assert rng_streams(6)["measure"].random() != rng_streams(5)["measure"].random()


def test_all_basis_outcomes_orthonormal():
    for basis in (Z, X, BELL, ZZ):
        vecs = np.array([basis.vector(o) for o in basis.outcomes])
        assert np.allclose(vecs @ vecs.conj().T, np.eye(len(vecs)))
        assert 2**basis.bits == len(basis.outcomes)


@pytest.mark.parametrize("bits", ["".join(p) for p in itertools.product("01", repeat=3)])
def test_prepare_basis(bits):
    assert np.allclose(prepare_basis(bits, ("x", "y", "z")).amps, ket(bits))
