# viewmodels/result_tables.py

from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

from core.noisy_sampler import ZNEFit
from core.observables import BootstrapSpectrum, StringOrderResult
from core.persistence import write_csv
from utils.logger import get_logger

logger = get_logger(__name__)


class ResultTable:
    """Row model with a fixed column schema, rendered to CSV."""

    def __init__(self, name: str, headers: Sequence[str]) -> None:
        self.name = name
        self.headers: List[str] = list(headers)
        self.rows: List[Dict[str, Any]] = []

    def row_count(self) -> int:
        return len(self.rows)

    def append(self, record: Mapping[str, Any]) -> None:
        missing = [h for h in self.headers if h not in record]
        extra = [k for k in record if k not in self.headers]
        if missing or extra:
            raise ValueError(f"{self.name} row does not match schema: missing {missing}, unexpected {extra}")
        self.rows.append(dict(record))

    def bulk_update(self, records: Iterable[Mapping[str, Any]]) -> None:
        """Append many rows at once; schema checks run row by row."""
        records = list(records)
        if not records:
            return
        for record in records:
            self.append(record)
        logger.debug(f"{self.name}: {len(records)} rows added, {self.row_count()} total")

    def as_lists(self) -> List[List[Any]]:
        return [[r[h] for h in self.headers] for r in self.rows]

    def to_csv(self, path: Union[str, Path]) -> str:
        return write_csv(path, self.headers, self.as_lists())


def string_order_table(result: StringOrderResult, zne_used: bool = False) -> ResultTable:
    table = ResultTable('string_order', ['parity', 'l', 's', 'value', 'stderr', 'zne_used'])
    table.bulk_update(
        {'parity': result.parity, 'l': l, 's': s, 'value': float(v), 'stderr': float(e), 'zne_used': zne_used}
        for (l, s), (v, e) in sorted(result.windows.items())
    )
    return table


def string_order_summary_table(results: Sequence[StringOrderResult]) -> ResultTable:
    table = ResultTable('string_order_summary', ['parity', 'l', 'mean', 'stderr'])
    for result in results:
        table.bulk_update(
            {'parity': result.parity, 'l': l, 'mean': float(m), 'stderr': float(e)}
            for l, (m, e) in sorted(result.means.items())
        )
    return table


def magnetization_table(values: Sequence[float], stderrs: Sequence[float]) -> ResultTable:
    table = ResultTable('magnetization', ['site', 'value', 'stderr'])
    table.bulk_update({'site': i, 'value': float(v), 'stderr': float(e)}
                      for i, (v, e) in enumerate(zip(values, stderrs)))
    return table


def spectrum_table(spectra: Mapping[int, BootstrapSpectrum]) -> ResultTable:
    """One row per eigenvalue rank of each left segment of length l (cut after site l - 1)."""
    table = ResultTable('spectrum', ['cut_bond', 'l', 'rank', 'mean', 'stddev'])
    for l, spectrum in sorted(spectra.items()):
        table.bulk_update(
            {'cut_bond': l - 1, 'l': l, 'rank': k, 'mean': float(m), 'stddev': float(s)}
            for k, (m, s) in enumerate(zip(spectrum.mean_eigenvalues, spectrum.stddevs))
        )
    return table


def zne_table(fits: Mapping[str, ZNEFit]) -> ResultTable:
    table = ResultTable('zne', ['observable', 'factor', 'value', 'stderr'])
    for name, fit in fits.items():
        table.bulk_update(
            {'observable': name, 'factor': float(f), 'value': float(v), 'stderr': float(e)}
            for f, v, e in zip(fit.noise_factors, fit.values, fit.stderrs)
        )
        table.append({'observable': name, 'factor': 0.0, 'value': float(fit.extrapolated_value),
                      'stderr': float(fit.extrapolated_stderr)})
    return table
