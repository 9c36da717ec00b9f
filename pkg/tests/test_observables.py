import numpy as np
import pytest

from core import statevector
from core.exceptions import FitError
from core.lattice import CouplingPattern, build_hamiltonian_mpo, mpo_to_dense
from core.mps import PauliString, entanglement_spectrum, from_statevector, reduced_density_matrix
from core.observables import (
    ExactProvider,
    StringOrderRequest,
    bootstrap_spectrum,
    commuting_groups,
    correlation_zz,
    cut_lengths,
    fit_edge_decay,
    magnetization_profile,
    measure_pauli_strings,
    pauli_labels,
    project_to_simplex,
    spectrum_degeneracy,
    string_order,
    tomography_rdm,
)


class TestStringOrderRequest:
    def test_default_start_sites(self):
        assert StringOrderRequest('even').start_sites == (20, 30, 40, 50, 60)
        assert StringOrderRequest('odd').start_sites == (19, 29, 39, 49, 59)

    @pytest.mark.parametrize('kwargs', [
        {'parity': 'both'},
        {'parity': 'even', 'lengths': [3]},
        {'parity': 'even', 'start_sites': [1]},
        {'parity': 'odd', 'start_sites': [2]},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StringOrderRequest(**kwargs)

    def test_window_must_fit_chain(self):
        req = StringOrderRequest('even', lengths=[20])
        req.validate_window(100)
        with pytest.raises(ValueError):
            req.validate_window(60)


class TestStringOrder:
    def test_even_singlets(self, even_singlets):
        req = StringOrderRequest('even', lengths=[2, 4], start_sites=[0, 2], edge_margin=0)
        result = string_order(even_singlets, req)
        assert result.means[2] == pytest.approx((1.0, 0.0))
        assert result.means[4] == pytest.approx((1.0, 0.0))
        assert set(result.windows) == {(2, 0), (2, 2), (4, 0), (4, 2)}

    def test_odd_singlets(self, odd_singlets):
        odd = string_order(odd_singlets, StringOrderRequest('odd', lengths=[2, 4], start_sites=[1, 3], edge_margin=1))
        even = string_order(odd_singlets, StringOrderRequest('even', lengths=[2], start_sites=[2], edge_margin=0))
        assert odd.means[4][0] == pytest.approx(1.0)
        assert even.means[2][0] == pytest.approx(0.0, abs=1e-12)

    def test_ground_state_orders_are_exclusive(self):
        c = CouplingPattern(1.0, 0.1, 10)
        _, vec = statevector.ground_state(mpo_to_dense(build_hamiltonian_mpo(c)))
        state = from_statevector(vec)
        even = string_order(state, StringOrderRequest('even', lengths=[4], start_sites=[2], edge_margin=2))
        odd = string_order(state, StringOrderRequest('odd', lengths=[4], start_sites=[3], edge_margin=2))
        assert even.means[4][0] > 0.8
        assert abs(odd.means[4][0]) < 0.05


class TestMagnetization:
    def test_odd_singlets_have_edge_spins(self, odd_singlets):
        values, errors = magnetization_profile(odd_singlets)
        assert values == pytest.approx([0.5, 0, 0, 0, 0, 0, 0, 0.5], abs=1e-12)
        assert np.all(errors == 0.0)

    def test_site_subset(self, odd_singlets):
        values, _ = magnetization_profile(odd_singlets, [7])
        assert values == pytest.approx([0.5])

    def test_singlet_correlation(self, even_singlets):
        assert correlation_zz(even_singlets, 0, 1) == pytest.approx(-1.0)
        assert correlation_zz(even_singlets, 1, 2) == pytest.approx(0.0, abs=1e-12)


class TestEdgeFit:
    @staticmethod
    def _profile(amplitude, xi1, n_cells):
        cells = amplitude * np.exp(-np.arange(n_cells) / xi1)
        profile = np.zeros(2 * n_cells)
        profile[0::2] = 0.75 * cells
        profile[1::2] = 0.25 * cells
        return profile

    def test_recovers_decay_length(self):
        fit = fit_edge_decay(self._profile(0.4, 1.5, 10), 10)
        assert fit.xi1 == pytest.approx(1.5, rel=1e-6)
        assert fit.xi == pytest.approx(3.0, rel=1e-6)
        assert fit.amplitude == pytest.approx(0.4, rel=1e-6)
        assert fit.cells_used == 10

    def test_noise_floor_excludes_cells(self):
        profile = self._profile(0.4, 1.0, 10)
        errs = np.full(profile.size, 2e-3)
        fit = fit_edge_decay(profile, 10, errs)
        # cell 4 is 0.4 e^-4 ~ 7e-3, below three cell stderrs
        assert fit.cells_used == 4

    def test_sub_floor_cell_inside_the_profile_is_skipped(self):
        profile = self._profile(0.4, 1.5, 10)
        profile[6:8] = 0.0
        fit = fit_edge_decay(profile, 10)
        assert fit.cells_used == 9
        assert fit.xi1 == pytest.approx(1.5, rel=1e-6)
        assert fit.amplitude == pytest.approx(0.4, rel=1e-6)

    @pytest.mark.slow
    def test_noisy_profiles_recover_decay_length(self):
        profile = self._profile(0.4, 1.5, 10)
        errs = np.full(profile.size, 5e-3)
        covered = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            fit = fit_edge_decay(profile + rng.normal(0.0, 5e-3, profile.size), 10, errs)
            covered += abs(fit.xi - 3.0) <= 3.0 * fit.fit_stderr
        assert covered >= 95

    def test_too_few_cells(self):
        with pytest.raises(FitError):
            fit_edge_decay(np.ones(10), 2)
        with pytest.raises(FitError):
            fit_edge_decay(np.zeros(20), 10)
        with pytest.raises(ValueError):
            fit_edge_decay(np.ones(6), 5)


class TestTomography:
    def test_group_cover(self):
        for l in (1, 2, 3):
            groups = commuting_groups(l)
            assert len(groups) == 3 ** l
            members = [m for g in groups for m in g.members]
            assert sorted(members) == sorted(pauli_labels(l))
        assert len(commuting_groups(6)) == 729

    def test_groups_are_qubitwise_commuting(self):
        for group in commuting_groups(2):
            for label in group.members:
                assert all(op in ('I', b) for op, b in zip(label, group.basis))

    def test_rdm_matches_direct_contraction(self, random_state):
        rdm = tomography_rdm(random_state, [2, 3, 4])
        direct = reduced_density_matrix(random_state, [2, 3, 4])
        assert np.allclose(rdm.entries, direct.entries, atol=1e-10)
        assert np.allclose(rdm.spectrum, direct.spectrum, atol=1e-10)

    def test_cap(self, random_state):
        with pytest.raises(ValueError):
            tomography_rdm(random_state, range(7))

    def test_every_string_measured(self, random_state):
        values = measure_pauli_strings(ExactProvider(random_state), [0, 1])
        assert len(values) == 16
        assert values['II'] == (1.0, 0.0)


class TestBootstrapSpectrum:
    def _inputs(self, state, sites, stderr):
        values = measure_pauli_strings(state, sites)
        means = {k: v for k, (v, _) in values.items()}
        errs = {k: (0.0 if set(k) == {'I'} else stderr) for k in values}
        return means, errs

    def test_zero_noise_gives_exact_spectrum(self, random_state):
        means, errs = self._inputs(random_state, [0, 1, 2], 0.0)
        spectrum = bootstrap_spectrum(means, errs, k=20, seed=3)
        exact = reduced_density_matrix(random_state, [0, 1, 2]).spectrum
        assert np.allclose(spectrum.mean_eigenvalues, exact, atol=1e-10)
        assert np.allclose(spectrum.stddevs, 0.0, atol=1e-12)
        assert spectrum.samples == 20

    def test_seeded(self, random_state):
        means, errs = self._inputs(random_state, [0, 1], 0.01)
        a = bootstrap_spectrum(means, errs, k=50, seed=7)
        b = bootstrap_spectrum(means, errs, k=50, seed=7)
        assert np.array_equal(a.mean_eigenvalues, b.mean_eigenvalues)
        assert np.all(a.stddevs > 0)

    def test_rejects_incomplete_inputs(self):
        with pytest.raises(ValueError):
            bootstrap_spectrum({'II': 1.0, 'XZ': 0.0}, {})
        with pytest.raises(ValueError):
            bootstrap_spectrum({'I': 1.0, 'X': 0.0, 'Y': 0.0, 'Z': np.nan}, {})

    def test_unphysical_inputs_give_a_physical_spectrum(self):
        # Bloch vector of length 1.04, as after an extrapolation overshoot
        means = {'I': 1.0, 'X': 0.6, 'Y': 0.6, 'Z': 0.6}
        errs = {'I': 0.0, 'X': 0.01, 'Y': 0.01, 'Z': 0.01}
        spectrum = bootstrap_spectrum(means, errs, k=1000, seed=1)
        assert np.all(spectrum.mean_eigenvalues >= 0.0)
        assert np.all(spectrum.mean_eigenvalues <= 1.0)
        assert spectrum.mean_eigenvalues.sum() == pytest.approx(1.0)
        assert spectrum.mean_eigenvalues[0] > 0.99

    @pytest.mark.parametrize('row, expected', [
        ([1.2, -0.2], [1.0, 0.0]),
        ([0.7, 0.1, 0.1], [0.7 + 1 / 30, 0.1 + 1 / 30, 0.1 + 1 / 30]),
        ([0.5, 0.5], [0.5, 0.5]),
        ([-0.1, 0.3, 0.9], [0.0, 0.2, 0.8]),
    ])
    def test_simplex_projection(self, row, expected):
        assert np.allclose(project_to_simplex(np.array([row])), [expected], atol=1e-12)


class TestSpectra:
    def test_cut_lengths(self):
        assert cut_lengths(6, 'j0') == [1, 3, 5]
        assert cut_lengths(6, 'j1') == [2, 4, 6]
        with pytest.raises(ValueError):
            cut_lengths(6, 'j2')

    def test_degeneracy_of_odd_singlets(self, odd_singlets):
        assert spectrum_degeneracy(odd_singlets, 1) == pytest.approx(1.0)
        assert spectrum_degeneracy(odd_singlets, 2) == pytest.approx(0.0, abs=1e-12)
        assert entanglement_spectrum(odd_singlets, 1) == pytest.approx([0.5, 0.5])


class TestExactProvider:
    def test_identity_and_sign(self, even_singlets):
        provider = ExactProvider(even_singlets)
        assert provider.expect(PauliString({})) == (1.0, 0.0)
        assert provider.expect(PauliString({0: 'Z', 1: 'Z'}, sign=-1)) == pytest.approx((1.0, 0.0))
        assert provider.n_sites == 8
