# core/linalg.py
"""
Dense tensor primitives: contraction, truncated SVD and QR.

Every tensor in the toolkit is a complex128 ``numpy.ndarray``. Entries are
linearized in row-major (C) order, i.e. the last axis varies fastest; this is
the order used by every serializer and by every reshape that splits or merges
axes. Site tensors are (left bond, physical, right bond), MPO tensors are
(left bond, physical out, physical in, right bond).
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from core.exceptions import DimensionError, NumericalError
from utils.logger import get_logger

logger = get_logger(__name__)

DenseTensor = np.ndarray

# Extent cap used by TruncationPolicy.unlimited(); bigger than any bond we build.
UNLIMITED_CHI = 2 ** 31 - 1


@dataclass(frozen=True)
class TruncationPolicy:
    """Limits applied when Schmidt values are cut.

    ``trunc_cut`` bounds the *squared* discarded weight.
    """

    chi_max: int = 100
    svd_min: float = 1e-10
    trunc_cut: float = 1e-12

    def __post_init__(self) -> None:
        if self.chi_max < 1:
            raise ValueError(f"chi_max must be positive, got {self.chi_max}")
        if self.svd_min < 0 or self.trunc_cut < 0:
            raise ValueError("svd_min and trunc_cut must be non-negative")

    @classmethod
    def unlimited(cls) -> 'TruncationPolicy':
        """Keep everything except numerically-zero Schmidt values."""
        return cls(chi_max=UNLIMITED_CHI, svd_min=1e-14, trunc_cut=0.0)

    def with_chi(self, chi_max: int) -> 'TruncationPolicy':
        return TruncationPolicy(chi_max=chi_max, svd_min=self.svd_min, trunc_cut=self.trunc_cut)

    def to_dict(self) -> dict:
        return {'chi_max': self.chi_max, 'svd_min': self.svd_min, 'trunc_cut': self.trunc_cut}

    @classmethod
    def from_dict(cls, data: dict) -> 'TruncationPolicy':
        return cls(**data)


class TruncatedSvd(NamedTuple):
    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray
    discarded_weight: float
    binding: Optional[str]


def as_tensor(data, shape: Optional[Sequence[int]] = None) -> DenseTensor:
    """Coerce ``data`` into a complex tensor, optionally reshaping in C order."""
    t = np.asarray(data, dtype=np.complex128)
    if shape is not None:
        expected = int(np.prod(shape)) if len(shape) else 1
        if t.size != expected:
            raise DimensionError(f"{t.size} entries cannot fill shape {tuple(shape)}")
        t = t.reshape(tuple(shape))
    return t


def tensor_to_entries(t: DenseTensor) -> List[List[float]]:
    """Flatten to [[re, im], ...] in C order."""
    flat = np.ascontiguousarray(t, dtype=np.complex128).ravel(order='C')
    return [[float(z.real), float(z.imag)] for z in flat]


def tensor_from_entries(shape: Sequence[int], entries: Sequence[Sequence[float]]) -> DenseTensor:
    pairs = np.asarray(entries, dtype=np.float64).reshape(-1, 2)
    return as_tensor(pairs[:, 0] + 1j * pairs[:, 1], shape)


def contract(a: DenseTensor, b: DenseTensor, paired_axes: Sequence[Tuple[int, int]]) -> DenseTensor:
    """Contract ``a`` with ``b`` over the listed (axis of a, axis of b) pairs.

    Output axes are the unpaired axes of ``a`` followed by those of ``b``.
    """
    axes_a = [p[0] for p in paired_axes]
    axes_b = [p[1] for p in paired_axes]
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise DimensionError("an axis may be paired only once")
    for ia, ib in paired_axes:
        if not (-a.ndim <= ia < a.ndim and -b.ndim <= ib < b.ndim):
            raise DimensionError(f"axis pair ({ia}, {ib}) out of range for ranks {a.ndim}, {b.ndim}")
        if a.shape[ia] != b.shape[ib]:
            raise DimensionError(
                f"cannot pair axis {ia} (extent {a.shape[ia]}) with axis {ib} (extent {b.shape[ib]})"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def truncation_cutoff(s: np.ndarray, policy: TruncationPolicy) -> Tuple[int, float, Optional[str]]:
    """How many of the descending values ``s`` survive ``policy``.

    Limits are applied as chi_max, then svd_min, then trunc_cut; the last one
    that removed something is reported as binding. At least one value is kept.
    """
    n = len(s)
    if n == 0:
        return 0, 0.0, None
    keep = n
    binding = None

    if keep > policy.chi_max:
        keep = policy.chi_max
        binding = 'chi_max'

    above = int(np.count_nonzero(s[:keep] >= policy.svd_min))
    if above < keep:
        keep = max(above, 1)
        binding = 'svd_min'

    sq = np.square(s)
    discarded = float(np.sum(sq[keep:]))
    if policy.trunc_cut > 0 and keep > 1:
        # cumulative weight of the tail s[j:keep], smallest first
        tail = np.cumsum(sq[:keep][::-1])
        droppable = int(np.count_nonzero(discarded + tail[:-1] < policy.trunc_cut))
        if droppable:
            keep -= droppable
            discarded = float(np.sum(sq[keep:]))
            binding = 'trunc_cut'

    return keep, discarded, binding


def _raw_svd(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver='gesdd', check_finite=False)
    except np.linalg.LinAlgError:
        logger.warning(f"gesdd failed on a {m.shape} matrix, retrying with gesvd")
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver='gesvd', check_finite=False)
    except np.linalg.LinAlgError as e:
        finite = bool(np.all(np.isfinite(m)))
        diagnostics = {
            'shape': m.shape,
            'finite': finite,
            'frobenius_norm': float(np.linalg.norm(m)) if finite else float('nan'),
            'max_abs_entry': float(np.max(np.abs(m))) if finite and m.size else float('nan'),
        }
        raise NumericalError(f"SVD did not converge: {e}", diagnostics) from e


def svd(m: DenseTensor) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Economic SVD of a matrix keeping every singular value."""
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got rank {m.ndim}")
    return _raw_svd(np.asarray(m, dtype=np.complex128))


def svd_truncate(m: DenseTensor, policy: TruncationPolicy, split: Optional[int] = None) -> TruncatedSvd:
    """Truncated SVD of ``m`` viewed as a matrix.

    ``split`` is the number of leading axes that form the row index; it may be
    omitted for matrices. Returns ``u`` (rows, k), descending ``s`` (k,),
    ``vh`` (k, cols) and the squared weight of the dropped values.
    """
    if m.ndim != 2:
        if split is None:
            raise DimensionError(f"rank-{m.ndim} tensor needs an explicit row/column split")
        rows = int(np.prod(m.shape[:split]))
        m = m.reshape(rows, -1)
    u, s, vh = _raw_svd(np.asarray(m, dtype=np.complex128))
    keep, discarded, binding = truncation_cutoff(s, policy)
    if binding is not None:
        logger.debug(f"svd_truncate kept {keep}/{len(s)} values, binding={binding}, discarded={discarded:.3e}")
    return TruncatedSvd(u[:, :keep], s[:keep], vh[:keep, :], discarded, binding)


def qr_positive(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Economic QR with a non-negative real diagonal on R (a unique gauge)."""
    q, r = scipy.linalg.qr(m, mode='economic', check_finite=False)
    d = np.diagonal(r)
    phase = np.ones_like(d)
    nonzero = np.abs(d) > 0
    phase[nonzero] = d[nonzero] / np.abs(d[nonzero])
    return q * phase[np.newaxis, :], phase.conj()[:, np.newaxis] * r


def is_unitary(u: np.ndarray, tol: float = 1e-8) -> bool:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]), ord=np.inf) <= tol)
