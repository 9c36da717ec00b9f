# core/persistence.py
"""Artifact I/O: MPS and circuit JSON, tables as CSV, QASM text, content hashes."""

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from core.circuit import BrickworkCircuit, circuit_from_dict, circuit_to_dict
from core.mps import MPSState, state_from_dict, state_to_dict
from utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def _plain(value: Any) -> Any:
    """numpy scalars and arrays to JSON-native values; non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def to_json_text(data: Any) -> str:
    return json.dumps(_plain(data), indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def content_hash(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def write_text(path: PathLike, text: str) -> str:
    """Write ``text`` and return the sha256 of the written bytes."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise
    logger.debug(f"Wrote {path}")
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def write_json(path: PathLike, data: Any) -> str:
    return write_text(path, to_json_text(data))


def read_json(path: PathLike) -> Any:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error reading {path}: {e}")
        raise


def write_csv(path: PathLike, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(headers)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in _plain(list(row))])
    return write_text(path, buffer.getvalue())


def read_csv(path: PathLike) -> Tuple[List[str], List[List[str]]]:
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            rows = list(csv.reader(f))
    except OSError as e:
        logger.error(f"Error reading {path}: {e}")
        raise
    return rows[0], rows[1:]


def save_mps(path: PathLike, state: MPSState) -> str:
    return write_json(path, state_to_dict(state))


def load_mps(path: PathLike) -> MPSState:
    state = state_from_dict(read_json(path))
    logger.debug(f"Loaded {state.n_sites}-site MPS from {path}")
    return state


def save_circuit(path: PathLike, circuit: BrickworkCircuit, full_params: Sequence[float]) -> str:
    return write_json(path, circuit_to_dict(circuit, full_params))


def load_circuit(path: PathLike) -> Tuple[BrickworkCircuit, np.ndarray]:
    circuit, params = circuit_from_dict(read_json(path))
    logger.debug(f"Loaded {circuit.n_gates}-gate circuit from {path}")
    return circuit, params


def file_record(path: PathLike, base: PathLike) -> Dict[str, str]:
    """Manifest entry for one artifact: path relative to ``base`` and its hash."""
    return {'path': Path(path).relative_to(Path(base)).as_posix(), 'sha256': content_hash(path)}
