import json

import numpy as np
import pytest

from core.circuit import build_brickwork
from core.lattice import PhaseLabel
from core.persistence import read_csv, read_json, save_circuit, save_mps
from main import build_parser, load_config, main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def model_file(workdir):
    path = workdir / 'model.json'
    path.write_text(json.dumps({'j0': 1.0, 'j1': 0.5, 'n_sites': 4}), encoding='utf-8')
    return str(path)


class TestParser:
    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_measurement_needs_one_source(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(['measure-edges'])
        args = build_parser().parse_args(['measure-spectrum', '--state', 's.json', '--l', '3', '--cut', 'j1'])
        assert (args.l, args.cut) == (3, 'j1')
        assert not args.verbose

    def test_phase_points_overlay_the_config(self):
        args = build_parser().parse_args(['run', '--phase-points', 'table1'])
        assert load_config(args).phase_points == ['O_1/2', 'E_1/2', 'E_-1', 'E_-2']
        assert load_config(build_parser().parse_args(['run'])).phase_points is None

    def test_verbose_flag_reaches_logger(self, mocker, workdir, model_file):
        spy = mocker.patch('main.set_verbose')
        assert main(['dmrg', '--model', model_file, '--output', 'out', '--verbose']) == 0
        spy.assert_called_once_with(True)


class TestCommands:
    def test_dmrg(self, workdir, model_file):
        assert main(['dmrg', '--model', model_file, '--output', 'out']) == 0
        summary = read_json(workdir / 'out' / 'dmrg' / 'summary.json')
        assert summary['n_sites'] == 4
        assert (workdir / 'out' / 'dmrg' / 'ground_state.json').exists()

    def test_compress_fixed_chi(self, workdir, random_state):
        save_mps(workdir / 'state.json', random_state)
        assert main(['compress', '--state', 'state.json', '--chi', '2', '--output', 'out']) == 0
        assert read_json(workdir / 'out' / 'compress' / 'summary.json')['chi'] == 2

    def test_measure_string_order(self, workdir, even_singlets):
        save_mps(workdir / 'singlets.json', even_singlets)
        assert main(['measure-string-order', '--state', 'singlets.json', '--parity', 'even', '--output', 'out']) == 0
        headers, rows = read_csv(workdir / 'out' / 'measure-string-order' / 'string_order_even.csv')
        assert headers[:3] == ['parity', 'l', 's']
        assert float(rows[0][3]) == pytest.approx(1.0)

    def test_export_qasm(self, workdir):
        circuit = build_brickwork(4, 1, PhaseLabel.EVEN_HALDANE)
        save_circuit(workdir / 'circuit.json', circuit, np.zeros(circuit.n_full_params))
        assert main(['export-qasm', '--circuit', 'circuit.json', '--output', 'out']) == 0
        text = (workdir / 'out' / 'export-qasm' / 'circuit.qasm').read_text(encoding='utf-8')
        assert text.startswith('OPENQASM 3.0;')

    def test_zne_validate_needs_noise(self, workdir, model_file):
        assert main(['zne-validate', '--layers', '1', '--model', model_file, '--output', 'out']) == 1

    def test_zne_validate(self, workdir, model_file):
        noise = workdir / 'noise.json'
        noise.write_text(json.dumps({'p2q': 0.0, 'readout': {'p01': 0.0, 'p10': 0.0}}), encoding='utf-8')
        cfg = workdir / 'pipeline.json'
        cfg.write_text(json.dumps({'measurement': {'zne': {'shots': None, 'twirls': 2, 'factors': [1.0, 1.5, 2.0]}}}),
                       encoding='utf-8')
        argv = ['zne-validate', '--layers', '1', '--config', str(cfg), '--model', model_file, '--noise', str(noise),
                '--output', 'out']
        assert main(argv) == 0
        assert read_json(workdir / 'out' / 'zne-validate' / 'validation.json')['flagged'] == []

    def test_missing_input_fails(self, workdir):
        assert main(['compress', '--state', 'absent.json', '--output', 'out']) == 1
