import hashlib
import math

import numpy as np
import pytest

from core.circuit import build_brickwork
from core.lattice import PhaseLabel
from core.mps import fidelity
from core.persistence import (
    content_hash,
    file_record,
    load_circuit,
    load_mps,
    read_csv,
    read_json,
    save_circuit,
    save_mps,
    to_json_text,
    write_csv,
    write_json,
    write_text,
)


class TestJson:
    def test_keys_are_sorted_and_numpy_is_plain(self):
        text = to_json_text({'b': np.float64(1.5), 'a': np.arange(3), 'c': (1, 2)})
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert text.endswith('\n')

    def test_non_finite_floats_become_strings(self, tmp_path):
        path = tmp_path / 'values.json'
        write_json(path, {'x': math.nan, 'y': -math.inf})
        assert read_json(path) == {'x': 'nan', 'y': '-inf'}

    def test_hash_matches_file_contents(self, tmp_path):
        path = tmp_path / 'nested' / 'out.json'
        digest = write_json(path, {'energy': -1.25})
        assert digest == content_hash(path)
        assert digest == hashlib.sha256(path.read_bytes()).hexdigest()

    def test_same_data_same_hash(self, tmp_path):
        a = write_json(tmp_path / 'a.json', {'x': 1, 'y': [0.1, 0.2]})
        b = write_json(tmp_path / 'b.json', {'y': [0.1, 0.2], 'x': 1})
        assert a == b

    def test_read_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_json(tmp_path / 'absent.json')


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / 'table.csv'
        write_csv(path, ['site', 'value'], [[0, 0.1], [1, np.float64(-0.25)]])
        headers, rows = read_csv(path)
        assert headers == ['site', 'value']
        assert rows == [['0', '0.1'], ['1', '-0.25']]

    def test_floats_keep_full_precision(self, tmp_path):
        path = tmp_path / 'table.csv'
        value = 1.0 / 3.0
        write_csv(path, ['v'], [[value]])
        _, rows = read_csv(path)
        assert float(rows[0][0]) == value


class TestArtifacts:
    def test_mps_round_trip(self, tmp_path, random_state):
        path = tmp_path / 'state.json'
        save_mps(path, random_state)
        again = load_mps(path)
        assert again.n_sites == random_state.n_sites
        assert fidelity(again, random_state) == pytest.approx(1.0, abs=1e-12)

    def test_circuit_round_trip(self, tmp_path, rng):
        circuit = build_brickwork(4, 2, PhaseLabel.EVEN_HALDANE)
        full = rng.uniform(-np.pi, np.pi, circuit.n_full_params)
        path = tmp_path / 'circuit.json'
        save_circuit(path, circuit, full)
        again, params = load_circuit(path)
        assert again == circuit
        assert np.allclose(params, full)

    def test_file_record(self, tmp_path):
        path = tmp_path / 'stage' / 'out.txt'
        digest = write_text(path, 'hello\n')
        assert file_record(path, tmp_path) == {'path': 'stage/out.txt', 'sha256': digest}
