import json

import numpy as np
import pytest

from core import statevector
from core.exceptions import DimensionError, NonUnitaryGateError
from core.linalg import TruncationPolicy
from core.mps import (
    MPSState,
    PauliString,
    add_states,
    apply_single_qubit_gate,
    apply_two_qubit_gate,
    canonicalize,
    compress,
    entanglement_spectrum,
    expect_pauli,
    fidelity,
    from_statevector,
    is_canonical,
    mpo_expectation,
    norm,
    overlap,
    product_state,
    random_mps,
    reduced_density_matrix,
    sample_bitstrings,
    state_from_dict,
    state_to_dict,
    to_statevector,
    truncate,
)
from core.lattice import CouplingPattern, build_hamiltonian_mpo, mpo_to_dense

SINGLET = np.array([0, 1, -1, 0]) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _random_unitary(rng, n=4):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


class TestMPSState:
    def test_rejects_bad_boundaries(self):
        with pytest.raises(DimensionError):
            MPSState([np.zeros((2, 2, 1))])

    def test_rejects_mismatched_bonds(self):
        with pytest.raises(DimensionError):
            MPSState([np.zeros((1, 2, 2)), np.zeros((3, 2, 1))])

    def test_product_state_bonds(self, zero_state):
        assert zero_state.bond_dimensions() == [1] * 5
        assert zero_state.max_bond_dimension() == 1

    def test_random_state_is_normalized(self, random_state):
        assert norm(random_state) == pytest.approx(1.0)
        assert norm(canonicalize(random_state, 4)) == pytest.approx(1.0)


class TestCanonicalize:
    def test_product_state_unchanged(self, zero_state):
        moved = canonicalize(zero_state, 0)
        for a, b in zip(moved.tensors, zero_state.tensors):
            assert np.allclose(a, b)

    def test_gauge_invariance(self, random_state):
        moved = canonicalize(random_state, 5)
        assert is_canonical(moved)
        assert abs(overlap(random_state, moved)) == pytest.approx(1.0, abs=1e-10)

    def test_expectations_do_not_depend_on_centre(self, rng):
        state = random_mps(6, 4, rng)
        p = PauliString({1: 'X', 2: 'Y', 4: 'Z'})
        values = [expect_pauli(canonicalize(state, c), p) for c in (0, 5, 2)]
        assert np.allclose(values, values[0], atol=1e-10)
        vec = to_statevector(state)
        oracle = statevector.expectation(vec, statevector.pauli_matrix(p, 6)).real
        assert values[0] == pytest.approx(oracle, abs=1e-10)

    def test_rejects_out_of_range_centre(self, random_state):
        with pytest.raises(ValueError):
            canonicalize(random_state, 8)


class TestFidelity:
    def test_self_fidelity(self, random_state):
        assert fidelity(random_state, random_state) == pytest.approx(1.0, abs=1e-12)

    def test_matches_statevector(self, rng):
        a, b = random_mps(8, 4, rng), random_mps(8, 4, rng)
        oracle = abs(np.vdot(to_statevector(a), to_statevector(b))) ** 2
        assert fidelity(a, b) == pytest.approx(oracle, abs=1e-10)
        assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-14)

    def test_length_mismatch(self, random_state, zero_state):
        with pytest.raises(DimensionError):
            fidelity(random_state, zero_state)


class TestExpectPauli:
    def test_zero_state(self, zero_state):
        assert expect_pauli(zero_state, PauliString({0: 'Z'})) == pytest.approx(1.0)

    def test_singlet_zz(self):
        state = from_statevector(SINGLET)
        assert expect_pauli(state, PauliString({0: 'Z', 1: 'Z'})) == pytest.approx(-1.0)

    def test_random_string_against_oracle(self, rng):
        state = random_mps(10, 6, rng)
        p = PauliString({2: 'X', 3: 'Z', 5: 'Y', 7: 'X'}, sign=-1)
        oracle = statevector.expectation(to_statevector(state), statevector.pauli_matrix(p, 10)).real
        assert expect_pauli(state, p) == pytest.approx(oracle, abs=1e-10)

    def test_site_out_of_range(self, zero_state):
        with pytest.raises(ValueError):
            expect_pauli(zero_state, PauliString({6: 'Z'}))

    def test_pauli_string_helpers(self):
        p = PauliString.from_label('XIZ', start=3)
        assert p.ops == {3: 'X', 5: 'Z'}
        assert p.label([3, 4, 5]) == 'XIZ'
        assert PauliString.z_string(2, 3).is_diagonal()
        assert PauliString({}).is_identity
        with pytest.raises(ValueError):
            PauliString({0: 'Q'})


class TestReducedDensityMatrix:
    def test_one_site_of_singlet(self):
        rdm = reduced_density_matrix(from_statevector(SINGLET), [0])
        assert np.allclose(rdm.spectrum, [0.5, 0.5])

    def test_whole_singlet_is_pure(self, even_singlets):
        rdm = reduced_density_matrix(even_singlets, [2, 3])
        assert np.allclose(rdm.spectrum, [1, 0, 0, 0], atol=1e-12)

    def test_matches_partial_trace(self, random_state):
        rdm = reduced_density_matrix(random_state, [2, 3, 4])
        oracle = statevector.partial_trace(to_statevector(random_state), [2, 3, 4], 8)
        assert np.allclose(rdm.entries, oracle, atol=1e-10)
        assert np.trace(rdm.entries).real == pytest.approx(1.0, abs=1e-8)

    def test_rejects_non_contiguous_and_oversized(self, random_state):
        with pytest.raises(ValueError):
            reduced_density_matrix(random_state, [0, 2])
        with pytest.raises(ValueError):
            reduced_density_matrix(random_state, range(8), cap=4)


class TestEntanglementSpectrum:
    def test_product_state(self, zero_state):
        assert np.allclose(entanglement_spectrum(zero_state, 2), [1.0])

    def test_singlet_product(self, even_singlets):
        assert np.allclose(entanglement_spectrum(even_singlets, 0), [0.5, 0.5])
        assert np.allclose(entanglement_spectrum(even_singlets, 1), [1.0])

    def test_matches_rdm_spectrum(self, random_state):
        spectrum = entanglement_spectrum(random_state, 2)
        rdm = reduced_density_matrix(random_state, [0, 1, 2]).spectrum
        assert np.allclose(spectrum, rdm[:spectrum.size], atol=1e-8)
        assert spectrum.sum() == pytest.approx(1.0, abs=1e-8)

    def test_dense_ground_state(self):
        c = CouplingPattern(1.0, 0.5, 8)
        _, vec = statevector.ground_state(mpo_to_dense(build_hamiltonian_mpo(c)))
        state = from_statevector(vec)
        rho = statevector.partial_trace(vec, range(4), 8)
        oracle = np.sort(np.linalg.eigvalsh(rho))[::-1]
        spectrum = entanglement_spectrum(state, 3)
        assert np.allclose(spectrum, oracle[:spectrum.size], atol=1e-8)

    def test_bond_out_of_range(self, zero_state):
        with pytest.raises(ValueError):
            entanglement_spectrum(zero_state, 5)


class TestGates:
    def test_identity_gate(self, random_state):
        out = apply_two_qubit_gate(random_state, np.eye(4), 3)
        assert fidelity(out, random_state) == pytest.approx(1.0, abs=1e-12)

    def test_cnot_makes_bell_pair(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        out = apply_two_qubit_gate(product_state([plus, 0]), CNOT, 0)
        assert np.allclose(entanglement_spectrum(out, 0), [0.5, 0.5])

    def test_random_circuit_against_oracle(self, rng):
        gates = [(1, _random_unitary(rng)), (4, _random_unitary(rng)), (2, _random_unitary(rng))]
        initial = random_mps(8, 2, rng)
        expected = to_statevector(initial)
        for site, u in gates:
            initial = apply_two_qubit_gate(initial, u, site)
            expected = statevector.apply_two(expected, u, site, 8)
        assert np.allclose(to_statevector(initial), expected, atol=1e-10)

    def test_rejects_non_unitary(self, random_state):
        with pytest.raises(NonUnitaryGateError):
            apply_two_qubit_gate(random_state, 2 * np.eye(4), 0)

    def test_truncation_error_accumulates(self, rng):
        state = random_mps(8, 4, rng)
        out = apply_two_qubit_gate(state, _random_unitary(rng), 3, TruncationPolicy(1, 0.0, 0.0))
        assert out.truncation_error > 0.0
        assert out.max_bond_dimension() <= 4

    def test_single_qubit_gate(self, zero_state):
        x = np.array([[0, 1], [1, 0]])
        out = apply_single_qubit_gate(zero_state, x, 2)
        assert expect_pauli(out, PauliString({2: 'Z'})) == pytest.approx(-1.0)


class TestStatevector:
    def test_zero_state(self, zero_state):
        vec = to_statevector(zero_state)
        assert vec[0] == 1.0 and np.count_nonzero(vec) == 1

    def test_singlet(self):
        state = from_statevector(SINGLET)
        assert np.allclose(to_statevector(state), SINGLET)

    def test_bit_order(self):
        # site 0 is the most significant bit
        vec = to_statevector(product_state([1, 0, 0]))
        assert vec[4] == 1.0

    def test_cap(self):
        with pytest.raises(DimensionError):
            to_statevector(product_state([0] * 15))


class TestCompress:
    def test_no_op_when_chi_is_large(self, random_state):
        out, fid = compress(random_state, 16)
        assert fid == pytest.approx(1.0, abs=1e-10)

    def test_bond_cap_and_reported_fidelity(self, rng):
        state = random_mps(10, 8, rng)
        out, fid = compress(state, 3)
        assert out.max_bond_dimension() <= 3
        assert fid == pytest.approx(fidelity(state, out), abs=1e-12)

    def test_ground_state_compresses_well(self):
        c = CouplingPattern(1.0, 0.5, 10)
        _, vec = statevector.ground_state(mpo_to_dense(build_hamiltonian_mpo(c)))
        out, fid = compress(from_statevector(vec), 8)
        assert fid > 0.99

    def test_rejects_zero_chi(self, random_state):
        with pytest.raises(ValueError):
            compress(random_state, 0)


class TestAddAndTruncate:
    def test_sum_matches_dense_sum(self, rng):
        a, b = random_mps(6, 3, rng), random_mps(6, 2, rng)
        total = add_states([(0.5, a), (-2j, b)])
        assert total.max_bond_dimension() == 5
        expected = 0.5 * to_statevector(a) - 2j * to_statevector(b)
        assert np.allclose(to_statevector(total), expected, atol=1e-12)

    def test_single_site(self):
        total = add_states([(1.0, product_state([0])), (1.0, product_state([1]))])
        assert np.allclose(to_statevector(total), [1.0, 1.0])

    def test_rejects_mismatched_lengths(self, random_state, zero_state):
        with pytest.raises(DimensionError):
            add_states([(1.0, random_state), (1.0, zero_state)])

    def test_unlimited_truncation_removes_redundant_bonds(self, random_state):
        doubled = add_states([(1.0, random_state), (1.0, random_state)])
        out = truncate(doubled, TruncationPolicy.unlimited())
        assert out.max_bond_dimension() == random_state.max_bond_dimension()
        assert norm(out) == pytest.approx(2.0)
        assert is_canonical(out)
        assert np.allclose(to_statevector(out), 2 * to_statevector(random_state), atol=1e-12)


class TestSerialization:
    def test_round_trip_is_byte_identical(self, random_state):
        text = json.dumps(state_to_dict(random_state), sort_keys=True)
        again = json.dumps(state_to_dict(state_from_dict(json.loads(text))), sort_keys=True)
        assert text == again

    def test_rejects_unknown_version(self, random_state):
        data = state_to_dict(random_state)
        data['version'] = 99
        with pytest.raises(ValueError):
            state_from_dict(data)


class TestSampling:
    def test_basis_state_is_deterministic(self, rng):
        out = sample_bitstrings(product_state([1, 0, 1, 1]), [0, 1, 3], 50, rng)
        assert np.all(out == np.array([1, 0, 1]))

    def test_singlet_outcomes_anticorrelated(self, rng, even_singlets):
        out = sample_bitstrings(even_singlets, [0, 1], 200, rng)
        assert np.all(out[:, 0] != out[:, 1])
        assert 0 < out[:, 0].sum() < 200

    def test_mpo_expectation_matches_dense(self, random_state):
        c = CouplingPattern(0.7, -0.3, 8)
        mpo = build_hamiltonian_mpo(c)
        vec = to_statevector(random_state)
        oracle = statevector.expectation(vec, mpo_to_dense(mpo)).real
        assert mpo_expectation(random_state, mpo) == pytest.approx(oracle, abs=1e-10)
