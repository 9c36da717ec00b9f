# core/lattice.py
"""
Bond-alternating Heisenberg chain: couplings, MPO, phase labels and the
singlet-product reference states.

H = sum_i J_i S_i . S_{i+1} = (1/4) sum_i J_i (XX + YY + ZZ)_{i,i+1},
with J_i = j0 on even bonds (i even) and j1 on odd bonds.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List

import numpy as np

from core.exceptions import ConfigError, DimensionError
from core.mps import MPSState, canonicalize
from utils.logger import get_logger

logger = get_logger(__name__)

MPO_DENSE_MAX_SITES = 12

SZ = np.diag([0.5, -0.5]).astype(np.complex128)
S_PLUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)
S_MINUS = S_PLUS.T.copy()
IDENTITY = np.eye(2, dtype=np.complex128)


class PhaseLabel(str, Enum):
    ODD_HALDANE = 'odd_haldane'
    EVEN_HALDANE = 'even_haldane'
    FERROMAGNETIC = 'ferromagnetic'
    BOUNDARY = 'boundary'


@dataclass
class CouplingPattern:
    """Model parameters; ``n_sites`` must be even."""

    j0: float
    j1: float
    n_sites: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.j0) and math.isfinite(self.j1)):
            raise ConfigError('model.j0/j1', f"couplings must be finite, got ({self.j0}, {self.j1})")
        if self.n_sites < 2 or self.n_sites % 2:
            raise ConfigError('model.n_sites', f"chain length must be even and >= 2, got {self.n_sites}")

    def coupling(self, bond: int) -> float:
        return self.j0 if bond % 2 == 0 else self.j1

    @property
    def phase(self) -> PhaseLabel:
        return phase_label(self.j0, self.j1)

    def scaled(self, factor: float) -> 'CouplingPattern':
        return CouplingPattern(self.j0 * factor, self.j1 * factor, self.n_sites)

    def to_dict(self) -> Dict[str, Any]:
        return {'j0': self.j0, 'j1': self.j1, 'n_sites': self.n_sites}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CouplingPattern':
        unknown = set(data) - {'j0', 'j1', 'n_sites'}
        if unknown:
            raise ConfigError(f"model.{sorted(unknown)[0]}", "unknown key")
        for key in ('j0', 'j1', 'n_sites'):
            if key not in data:
                raise ConfigError(f"model.{key}", "missing")
        return cls(float(data['j0']), float(data['j1']), int(data['n_sites']))


@dataclass
class MPO:
    tensors: List[np.ndarray]

    def __post_init__(self) -> None:
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[3] != 1:
            raise DimensionError("MPO boundary bonds must be 1")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[3] != self.tensors[i + 1].shape[0]:
                raise DimensionError(f"MPO bond {i} extents do not match")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dimensions(self) -> List[int]:
        return [w.shape[3] for w in self.tensors[:-1]]


def phase_label(j0: float, j1: float) -> PhaseLabel:
    if j1 > 0 and j1 > j0:
        return PhaseLabel.ODD_HALDANE
    if j0 > 0 and j0 > j1:
        return PhaseLabel.EVEN_HALDANE
    if j0 < 0 and j1 < 0:
        return PhaseLabel.FERROMAGNETIC
    return PhaseLabel.BOUNDARY


def build_hamiltonian_mpo(c: CouplingPattern) -> MPO:
    """Five-channel MPO; the bulk block on site i is

        [ I   J/2 S+   J/2 S-   J Sz   0  ]
        [ 0     0        0       0     S- ]
        [ 0     0        0       0     S+ ]
        [ 0     0        0       0     Sz ]
        [ 0     0        0       0     I  ]

    with J = J_i, so each bond carries its own coupling.
    """
    tensors = []
    for i in range(c.n_sites):
        w = np.zeros((5, 2, 2, 5), dtype=np.complex128)
        w[0, :, :, 0] = IDENTITY
        w[4, :, :, 4] = IDENTITY
        w[1, :, :, 4] = S_MINUS
        w[2, :, :, 4] = S_PLUS
        w[3, :, :, 4] = SZ
        if i < c.n_sites - 1:
            j = c.coupling(i)
            w[0, :, :, 1] = 0.5 * j * S_PLUS
            w[0, :, :, 2] = 0.5 * j * S_MINUS
            w[0, :, :, 3] = j * SZ
        if i == 0:
            w = w[0:1]
        if i == c.n_sites - 1:
            w = w[..., 4:5]
        tensors.append(w)
    return MPO(tensors)


def total_z_mpo(n_sites: int) -> MPO:
    """sum_i Z_i as a bond-dimension-2 MPO."""
    z = np.diag([1.0, -1.0]).astype(np.complex128)
    tensors = []
    for i in range(n_sites):
        w = np.zeros((2, 2, 2, 2), dtype=np.complex128)
        w[0, :, :, 0] = IDENTITY
        w[1, :, :, 1] = IDENTITY
        w[0, :, :, 1] = z
        if i == 0:
            w = w[0:1]
        if i == n_sites - 1:
            w = w[..., 1:2]
        tensors.append(w)
    return MPO(tensors)


def mpo_to_dense(mpo: MPO) -> np.ndarray:
    """(2^N, 2^N) matrix, rows indexed by the output spins."""
    if mpo.n_sites > MPO_DENSE_MAX_SITES:
        raise DimensionError(f"{mpo.n_sites} sites exceed the dense MPO cap of {MPO_DENSE_MAX_SITES}")
    block = mpo.tensors[0][0]
    for w in mpo.tensors[1:]:
        block = np.einsum('stw,wxyv->sxtyv', block, w)
        block = block.reshape(block.shape[0] * 2, block.shape[2] * 2, -1)
    return block[..., 0]


def _singlet_pair() -> List[np.ndarray]:
    left = np.zeros((1, 2, 2), dtype=np.complex128)
    left[0, 0, 0] = left[0, 1, 1] = 1.0 / np.sqrt(2.0)
    right = np.zeros((2, 2, 1), dtype=np.complex128)
    right[0, 1, 0] = 1.0
    right[1, 0, 0] = -1.0
    return [left, right]


def _up_spin() -> np.ndarray:
    t = np.zeros((1, 2, 1), dtype=np.complex128)
    t[0, 0, 0] = 1.0
    return t


def singlet_reference_state(phase: PhaseLabel, n_sites: int) -> MPSState:
    """Exact ground state of the decoupled limit of ``phase``.

    even_haldane: singlets on bonds (0,1), (2,3), ...
    odd_haldane:  |0> + singlets on (1,2), (3,4), ... + |0>
    """
    if n_sites < 2 or n_sites % 2:
        raise ValueError(f"chain length must be even and >= 2, got {n_sites}")
    phase = PhaseLabel(phase)
    if phase == PhaseLabel.EVEN_HALDANE:
        tensors = [t for _ in range(n_sites // 2) for t in _singlet_pair()]
    elif phase == PhaseLabel.ODD_HALDANE:
        tensors = [_up_spin()] + [t for _ in range(n_sites // 2 - 1) for t in _singlet_pair()] + [_up_spin()]
    else:
        raise ValueError(f"no singlet reference state for phase '{phase.value}'")
    return canonicalize(MPSState(tensors), 0)


@dataclass(frozen=True)
class PhasePoint:
    """A studied point of the phase diagram with its N=100 reference numbers."""

    name: str
    j0: float
    j1: float
    energy: float
    chi: int
    compressed_chi: int
    compressed_energy: float
    initial_fidelity: float
    layers: float
    compiled_fidelity: float

    @property
    def phase(self) -> PhaseLabel:
        return phase_label(self.j0, self.j1)

    def pattern(self, n_sites: int = 100) -> CouplingPattern:
        return CouplingPattern(self.j0, self.j1, n_sites)


def named_phase_points() -> Dict[str, PhasePoint]:
    points = [
        PhasePoint('O_1/2', 0.5, 1.0, -38.166, 22, 5, -38.164, 0.40, 3.0, 0.989),
        PhasePoint('E_1/2', 1.0, 0.5, -38.819, 19, 5, -38.817, 0.46, 3.5, 0.989),
        PhasePoint('E_-1', 1.0, -1.0, -41.150, 26, 8, -41.150, 0.23, 3.5, 0.990),
        PhasePoint('E_-2', 1.0, -2.0, -49.329, 40, 8, -49.329, 0.02, 6.5, 0.979),
    ]
    return {p.name: p for p in points}
