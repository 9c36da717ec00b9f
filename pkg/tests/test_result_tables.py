import numpy as np
import pytest

from core.noisy_sampler import zne_extrapolate
from core.observables import StringOrderRequest, string_order
from core.persistence import read_csv
from viewmodels.result_tables import (
    ResultTable,
    magnetization_table,
    string_order_summary_table,
    string_order_table,
    zne_table,
)


@pytest.fixture
def table():
    t = ResultTable('demo', ['site', 'value'])
    t.bulk_update([{'site': 0, 'value': 0.5}, {'site': 1, 'value': -0.5}])
    return t


class TestResultTable:
    def test_rows_follow_header_order(self, table):
        assert table.row_count() == 2
        assert table.as_lists() == [[0, 0.5], [1, -0.5]]

    def test_schema_enforced(self, table):
        with pytest.raises(ValueError):
            table.append({'site': 2})
        with pytest.raises(ValueError):
            table.append({'site': 2, 'value': 0.0, 'extra': 1})
        assert table.row_count() == 2

    def test_csv(self, tmp_path, table):
        table.to_csv(tmp_path / 'demo.csv')
        headers, rows = read_csv(tmp_path / 'demo.csv')
        assert headers == ['site', 'value']
        assert rows == [['0', '0.5'], ['1', '-0.5']]


class TestFactories:
    def test_string_order_tables(self, even_singlets):
        result = string_order(even_singlets, StringOrderRequest('even', lengths=[2, 4], start_sites=[0, 2],
                                                                 edge_margin=0))
        windows = string_order_table(result)
        assert windows.row_count() == 4
        assert windows.headers == ['parity', 'l', 's', 'value', 'stderr', 'zne_used']
        summary = string_order_summary_table([result])
        assert [r['l'] for r in summary.rows] == [2, 4]
        assert [r['mean'] for r in summary.rows] == pytest.approx([1.0, 1.0])

    def test_magnetization_table(self):
        t = magnetization_table(np.array([0.5, 0.0]), np.zeros(2))
        assert [r['site'] for r in t.rows] == [0, 1]

    def test_zne_table_appends_extrapolated_row(self):
        fit = zne_extrapolate([(1.0, 0.9, 0.0), (1.5, 0.85, 0.0), (2.0, 0.8, 0.0)], ('linear',))
        t = zne_table({'Z0': fit})
        assert t.row_count() == 4
        assert t.rows[3]['factor'] == 0.0
        assert t.rows[3]['value'] == pytest.approx(1.0)
