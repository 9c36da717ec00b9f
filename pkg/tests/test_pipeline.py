import numpy as np
import pytest

from core.exceptions import StageError
from core.lattice import CouplingPattern, build_hamiltonian_mpo, named_phase_points
from core.mps import mpo_expectation, reduced_density_matrix
from core.observables import EdgeFit, ExactProvider, cut_lengths, string_order
from core.persistence import read_csv, read_json
from core.pipeline import (
    STAGES,
    compress_stage,
    ground_state_stage,
    measure_edges,
    measure_stage,
    measure_string_order,
    point_config,
    run_pipeline,
    string_order_request,
)
from utils.config import CompressionConfig, PipelineConfig


def _small_config(output_dir, **measurement):
    return PipelineConfig.from_dict({
        'model': {'j0': 1.0, 'j1': 0.5, 'n_sites': 4},
        'aqc': {'max_iterations': 20},
        'campaign': {'layers': [1]},
        'measurement': {'tomography_max_l': 2, 'bootstrap_samples': 10, **measurement},
        'output_dir': str(output_dir),
        'seed': 17,
    })


class TestStringOrderRequest:
    def test_standard_windows_on_long_chains(self):
        assert string_order_request('even', 100).start_sites == (20, 30, 40, 50, 60)

    def test_short_chain_gets_centred_window(self):
        req = string_order_request('odd', 8)
        assert req.start_sites == (1,)
        assert req.lengths == (2, 4, 6)
        req.validate_window(8)

    def test_too_short(self):
        assert string_order_request('odd', 2) is None
        assert string_order_request('even', 2).lengths == (2,)

    def test_configured_windows(self):
        cfg = _small_config('unused', string_lengths=[2], start_sites={'even': [0]}, edge_margin=0)
        req = string_order_request('even', 4, cfg.measurement)
        assert req.lengths == (2,)
        assert list(req.start_sites) == [0]


class TestStages:
    def test_ground_state_uses_phase_sector(self, tmp_path):
        result, mpo = ground_state_stage(_small_config(tmp_path))
        assert result.sector == pytest.approx(0.0, abs=1e-10)
        assert result.energy == pytest.approx(mpo_expectation(result.state, mpo), abs=1e-10)

    def test_fixed_chi_compression(self, random_state):
        result = compress_stage(random_state, CompressionConfig(chi=2))
        assert result.chi == 2
        assert 0.0 < result.fidelity < 1.0
        assert result.energy is None

    def test_chi_search_stops_at_floor(self, even_singlets):
        h = build_hamiltonian_mpo(CouplingPattern(1.0, 0.5, 8))
        result = compress_stage(even_singlets, CompressionConfig(fidelity_floor=0.999), h)
        assert result.chi == 2
        assert result.fidelity == 1.0
        assert result.energy == pytest.approx(mpo_expectation(even_singlets, h))

    def test_measure_both_parities(self, even_singlets):
        results = measure_string_order(ExactProvider(even_singlets))
        assert set(results) == {'even', 'odd'}
        assert results['even'].means[2][0] == pytest.approx(1.0)

    def test_ground_state_source(self, tmp_path):
        cfg = _small_config(tmp_path, source='ground_state')
        result, _ = ground_state_stage(cfg)
        report = measure_stage(cfg, result.state)
        assert set(report.spectra) == {'j0', 'j1'}
        assert report.magnetization[0].shape == (4,)
        assert report.edge_fit is None
        assert report.zne_fits == {}

    def test_compiled_source_needs_circuit(self, tmp_path, even_singlets):
        with pytest.raises(ValueError):
            measure_stage(_small_config(tmp_path), even_singlets)


class TestRunPipeline:
    def test_writes_every_stage(self, tmp_path):
        manifest = run_pipeline(_small_config(tmp_path / 'out'))
        assert [s['name'] for s in manifest['stages']] == list(STAGES)
        assert all('wall_time' not in s for s in manifest['stages'])
        assert read_json(tmp_path / 'out' / 'manifest.json') == manifest
        report = read_json(tmp_path / 'out' / 'report' / 'report.json')
        assert report['phase'] == 'even_haldane'
        assert set(report['compile']['fidelities']) == {'initial', 'compressed', 'uncompressed'}
        assert (tmp_path / 'out' / 'compile' / 'circuit.qasm').exists()

    def test_rerun_reproduces_hashes(self, tmp_path):
        cfg = _small_config(tmp_path / 'out')
        first = run_pipeline(cfg)
        second = run_pipeline(cfg)
        assert [s['hash'] for s in first['stages']] == [s['hash'] for s in second['stages']]

    def test_timing_is_opt_in(self, tmp_path, mocker):
        mocker.patch('core.pipeline.compile_stage', side_effect=RuntimeError('stop'))
        with pytest.raises(StageError):
            run_pipeline(_small_config(tmp_path), record_timing=True)
        manifest = read_json(tmp_path / 'manifest.json')
        assert all('wall_time' in s for s in manifest['stages'])

    def test_failed_stage_keeps_partial_manifest(self, tmp_path, mocker):
        mocker.patch('core.pipeline.compile_stage', side_effect=RuntimeError('optimizer exploded'))
        with pytest.raises(StageError) as exc:
            run_pipeline(_small_config(tmp_path))
        assert exc.value.stage == 'compile'
        assert exc.value.completed == ['dmrg', 'compress']
        written = read_json(tmp_path / 'manifest.json')
        assert [s['name'] for s in written['stages']] == ['dmrg', 'compress']
        assert written == exc.value.manifest


class TestEdgeLogging:
    def test_interval_is_the_fit_stderr(self, mocker):
        provider = mocker.Mock(n_sites=40)
        mocker.patch('core.pipeline.magnetization_profile', return_value=(np.zeros(40), np.full(40, 0.01)))
        fit = EdgeFit(xi1=0.75, xi=1.5, amplitude=0.2, fit_stderr=0.05, cells_used=8)
        mocker.patch('core.pipeline.fit_edge_decay', return_value=fit)
        log = mocker.patch('core.pipeline.logger')
        _, returned = measure_edges(provider, 10)
        assert returned is fit
        messages = [call.args[0] for call in log.info.call_args_list]
        assert any('xi = 1.5000 +/- 0.0500' in m for m in messages)


def _sweep_config(output_dir, points):
    return PipelineConfig.from_dict({
        'model': {'n_sites': 8},
        'aqc': {'max_iterations': 20},
        'campaign': {'layers': [1]},
        'measurement': {'source': 'ground_state', 'tomography_max_l': 2, 'bootstrap_samples': 10},
        'phase_points': points,
        'output_dir': str(output_dir),
        'seed': 5,
    })


class TestPhaseSweep:
    def test_point_config_takes_couplings_and_keeps_length(self, tmp_path):
        cfg = _sweep_config(tmp_path, ['O_1/2'])
        point = point_config(cfg, 'O_1/2', 11)
        assert (point.model.j0, point.model.j1, point.model.n_sites) == (0.5, 1.0, 8)
        assert point.phase_points is None
        assert point.seed == 11
        assert point.output_dir == str(tmp_path / 'O_1_2')

    def test_table1_records_one_energy_per_point(self, tmp_path):
        cfg = _sweep_config(tmp_path / 'out', 'table1')
        manifest = run_pipeline(cfg)
        names = list(named_phase_points())
        assert list(manifest['energies']) == names
        assert read_json(tmp_path / 'out' / 'manifest.json') == manifest
        for name in names:
            direct, _ = ground_state_stage(point_config(cfg, name, 0))
            assert manifest['energies'][name] == pytest.approx(direct.energy, abs=1e-8)
            entry = manifest['points'][name]
            assert entry['reference_energy'] == named_phase_points()[name].energy
            point_manifest = read_json(tmp_path / 'out' / entry['manifest']['path'])
            assert [s['name'] for s in point_manifest['stages']] == list(STAGES)
            assert point_manifest['energy'] == manifest['energies'][name]

    def test_sweep_is_reproducible(self, tmp_path):
        cfg = _sweep_config(tmp_path / 'out', ['E_1/2', 'E_-1'])
        first = run_pipeline(cfg)
        second = run_pipeline(cfg)
        assert first == second

    def test_failing_points_are_reported(self, tmp_path, mocker):
        mocker.patch('core.pipeline.compile_stage', side_effect=RuntimeError('optimizer exploded'))
        cfg = _sweep_config(tmp_path, ['O_1/2', 'E_1/2'])
        with pytest.raises(StageError) as exc:
            run_pipeline(cfg)
        assert exc.value.completed == []
        written = read_json(tmp_path / 'manifest.json')
        assert written['failed'] == {'O_1/2': 'compile', 'E_1/2': 'compile'}
        assert written['energies'] == {}
        assert written == exc.value.manifest


@pytest.mark.slow
class TestDeskReproduction:
    def test_noiseless_tables_match_direct_evaluation(self, tmp_path):
        cfg = PipelineConfig.from_dict({
            'model': {'j0': 1.0, 'j1': 0.5, 'n_sites': 20},
            'aqc': {'max_iterations': 20},
            'campaign': {'layers': [1]},
            'measurement': {'source': 'ground_state', 'tomography_max_l': 4, 'bootstrap_samples': 10},
            'output_dir': str(tmp_path),
            'seed': 3,
        })
        run_pipeline(cfg)
        direct, _ = ground_state_stage(cfg)
        state = direct.state

        for parity in ('even', 'odd'):
            expected = string_order(state, string_order_request(parity, 20, cfg.measurement))
            _, rows = read_csv(tmp_path / 'measure' / f'string_order_{parity}.csv')
            assert len(rows) == len(expected.windows)
            for row in rows:
                value, _ = expected.windows[(int(row[1]), int(row[2]))]
                assert float(row[3]) == pytest.approx(value, abs=1e-6)

        for cut in ('j0', 'j1'):
            _, rows = read_csv(tmp_path / 'measure' / f'spectrum_{cut}.csv')
            measured = {}
            for row in rows:
                measured.setdefault(int(row[1]), []).append(float(row[3]))
            assert sorted(measured) == cut_lengths(4, cut)
            for l, means in measured.items():
                exact = reduced_density_matrix(state, list(range(l))).spectrum
                assert np.allclose(means, exact, atol=1e-6)
