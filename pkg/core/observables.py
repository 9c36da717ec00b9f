# core/observables.py
"""
Diagnostics of the Haldane phases: string order, magnetization profiles,
edge-decay fits, Pauli tomography of reduced density matrices and
bootstrapped entanglement spectra.

Every estimate flows through an expectation provider. A provider maps a
``PauliString`` to ``(mean, stderr)``; ``ExactProvider`` wraps an MPS, the
noisy sampler supplies shot-based ones.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np
from scipy.optimize import curve_fit

from core.exceptions import FitError
from core.mps import (
    PAULI,
    MPSState,
    PauliString,
    ReducedDensityMatrix,
    canonicalize,
    entanglement_spectrum,
    expect_pauli,
)
from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_START_SITES = {'even': (20, 30, 40, 50, 60), 'odd': (19, 29, 39, 49, 59)}
DEFAULT_EDGE_MARGIN = 20
TOMOGRAPHY_MAX_SITES = 6
NOISELESS_FLOOR = 1e-10

Estimate = Tuple[float, float]


@runtime_checkable
class ExpectationProvider(Protocol):
    concurrent_safe: bool
    n_sites: int

    def expect(self, p: PauliString) -> Estimate:
        ...


class ExactProvider:
    """Noiseless expectations of an MPS; stderr is always 0."""

    concurrent_safe = False

    def __init__(self, state: MPSState):
        self._state = state
        self.n_sites = state.n_sites

    def expect(self, p: PauliString) -> Estimate:
        if p.is_identity:
            return p.sign * 1.0, 0.0
        lo = min(p.sites)
        # expect_pauli recentres into the window; keep the moved state for the next query
        if self._state.ortho_center is None or not lo <= self._state.ortho_center <= max(p.sites):
            self._state = canonicalize(self._state, lo)
        return expect_pauli(self._state, p), 0.0

    def expect_group(self, ps: Sequence[PauliString]) -> List[Estimate]:
        return [self.expect(p) for p in ps]


def as_provider(source: Union[MPSState, ExpectationProvider]) -> ExpectationProvider:
    return ExactProvider(source) if isinstance(source, MPSState) else source


def _expect_many(provider: ExpectationProvider, ps: Sequence[PauliString]) -> List[Estimate]:
    group = getattr(provider, 'expect_group', None)
    if group is not None:
        return list(group(ps))
    return [provider.expect(p) for p in ps]


# --- string order and magnetization ----------------------------------------

@dataclass
class StringOrderRequest:
    parity: str
    lengths: Sequence[int] = tuple(range(2, 21, 2))
    start_sites: Optional[Sequence[int]] = None
    edge_margin: int = DEFAULT_EDGE_MARGIN

    def __post_init__(self) -> None:
        if self.parity not in ('even', 'odd'):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        for l in self.lengths:
            if l < 2 or l % 2:
                raise ValueError(f"string length must be even and >= 2, got {l}")
        if self.start_sites is None:
            self.start_sites = DEFAULT_START_SITES[self.parity]
        want = 0 if self.parity == 'even' else 1
        for s in self.start_sites:
            if s % 2 != want:
                raise ValueError(f"start site {s} does not match {self.parity} parity")

    def validate_window(self, n_sites: int) -> None:
        limit = n_sites - self.edge_margin
        for s in self.start_sites:
            for l in self.lengths:
                if s < 0 or s + l > limit:
                    raise ValueError(f"string at s={s}, l={l} leaves the window [0, {limit}] of a {n_sites}-site chain")

    def to_dict(self) -> dict:
        return {'parity': self.parity, 'lengths': list(self.lengths),
                'start_sites': list(self.start_sites), 'edge_margin': self.edge_margin}


@dataclass
class StringOrderResult:
    parity: str
    # (l, s) -> (value, stderr)
    windows: Dict[Tuple[int, int], Estimate] = field(default_factory=dict)
    # l -> (mean, stderr of the mean)
    means: Dict[int, Estimate] = field(default_factory=dict)


def string_order(source: Union[MPSState, ExpectationProvider], req: StringOrderRequest) -> StringOrderResult:
    """(-1)^(l/2) <Z_s ... Z_{s+l-1}> per window, averaged over start sites."""
    provider = as_provider(source)
    req.validate_window(provider.n_sites)
    keys = [(l, s) for l in req.lengths for s in req.start_sites]
    strings = [PauliString.z_string(s, l, sign=-1 if (l // 2) % 2 else 1) for l, s in keys]
    result = StringOrderResult(req.parity)
    for key, estimate in zip(keys, _expect_many(provider, strings)):
        result.windows[key] = estimate
    for l in req.lengths:
        values = [result.windows[(l, s)] for s in req.start_sites]
        mean = sum(v for v, _ in values) / len(values)
        stderr = math.sqrt(sum(e ** 2 for _, e in values)) / len(values)
        result.means[l] = (mean, stderr)
        logger.debug(f"S^{req.parity[0].upper()}_l={l}: {mean:.6f} +/- {stderr:.2e}")
    return result


def magnetization_profile(
    source: Union[MPSState, ExpectationProvider], sites: Optional[Sequence[int]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-site <Z_i>/2 and its stderr."""
    provider = as_provider(source)
    sites = list(range(provider.n_sites)) if sites is None else list(sites)
    estimates = _expect_many(provider, [PauliString({s: 'Z'}) for s in sites])
    values = np.array([v for v, _ in estimates]) / 2.0
    errors = np.array([e for _, e in estimates]) / 2.0
    return values, errors


def correlation_zz(state: MPSState, i: int, j: int) -> float:
    """Connected <Z_i Z_j> - <Z_i><Z_j>."""
    zz = expect_pauli(state, PauliString({i: 'Z', j: 'Z'}))
    return zz - expect_pauli(state, PauliString({i: 'Z'})) * expect_pauli(state, PauliString({j: 'Z'}))


# --- edge decay -------------------------------------------------------------

@dataclass
class EdgeFit:
    xi1: float
    xi: float
    amplitude: float
    fit_stderr: float
    cells_used: int

    def to_dict(self) -> dict:
        return {'xi1': self.xi1, 'xi': self.xi, 'amplitude': self.amplitude,
                'fit_stderr': self.fit_stderr, 'cells_used': self.cells_used}


def _decay(x, amplitude, xi1):
    return amplitude * np.exp(-x / xi1)


def fit_edge_decay(profile: Sequence[float], n_cells: int, stderrs: Optional[Sequence[float]] = None) -> EdgeFit:
    """Fit two-site cell magnetizations from the left end to A exp(-x / xi1).

    ``profile`` holds <Z_i>/2 per site. Cells below the noise floor (three
    cell stderrs, or ``NOISELESS_FLOOR`` without stderrs) are left out of the
    fit; the remaining cells keep their distance from the edge.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if n_cells < 3:
        raise FitError(f"an edge fit needs at least 3 cells, got {n_cells}")
    if profile.size < 2 * n_cells:
        raise ValueError(f"profile of {profile.size} sites is too short for {n_cells} cells")
    cells = profile[0:2 * n_cells:2] + profile[1:2 * n_cells:2]
    if stderrs is not None:
        errs = np.asarray(stderrs, dtype=np.float64)
        cell_err = np.sqrt(errs[0:2 * n_cells:2] ** 2 + errs[1:2 * n_cells:2] ** 2)
        floor = 3.0 * cell_err
    else:
        cell_err = None
        floor = np.full(n_cells, NOISELESS_FLOOR)
    kept = np.flatnonzero(np.abs(cells) > floor)
    usable = int(kept.size)
    if usable < 3:
        raise FitError(f"only {usable} cells lie above the noise floor")

    x = kept.astype(np.float64)
    y = cells[kept]
    ratio = abs(y[1] / y[0]) if y[0] else 0.5
    guess = -(x[1] - x[0]) / math.log(ratio) if 0.0 < ratio < 1.0 else 1.0
    sigma = None
    if cell_err is not None and np.all(cell_err[kept] > 0):
        sigma = cell_err[kept]
    try:
        popt, pcov = curve_fit(_decay, x, y, p0=(y[0], guess), sigma=sigma,
                               absolute_sigma=sigma is not None, bounds=([-np.inf, 1e-6], [np.inf, np.inf]))
    except (RuntimeError, ValueError) as e:
        raise FitError(f"edge decay fit failed: {e}") from e
    amplitude, xi1 = float(popt[0]), float(popt[1])
    var = float(pcov[1, 1]) if np.isfinite(pcov[1, 1]) else float('inf')
    fit = EdgeFit(xi1=xi1, xi=2.0 * xi1, amplitude=amplitude, fit_stderr=2.0 * math.sqrt(max(var, 0.0)),
                  cells_used=usable)
    logger.info(f"edge fit over {usable} cells: xi = {fit.xi:.4f} +/- {fit.fit_stderr:.4f}")
    return fit


# --- tomography -------------------------------------------------------------

@dataclass
class MeasurementGroup:
    basis: str
    members: List[str]


def pauli_labels(l: int) -> List[str]:
    return [''.join(p) for p in itertools.product('IXYZ', repeat=l)]


def pauli_string_matrix(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for op in label:
        out = np.kron(out, PAULI[op])
    return out


def commuting_groups(l: int) -> List[MeasurementGroup]:
    """Qubit-wise commuting cover of all 4^l strings with one basis per group.

    A string joins the basis that agrees with it on every non-identity site
    and reads Z where it holds I, so each string lands in exactly one group.
    """
    if l < 1:
        raise ValueError(f"group size needs l >= 1, got {l}")
    groups = {''.join(b): [] for b in itertools.product('XYZ', repeat=l)}
    for label in pauli_labels(l):
        groups[label.replace('I', 'Z')].append(label)
    return [MeasurementGroup(basis, members) for basis, members in groups.items()]


def _label_to_string(label: str, sites: Sequence[int]) -> PauliString:
    return PauliString({site: op for site, op in zip(sites, label)})


def measure_pauli_strings(
    source: Union[MPSState, ExpectationProvider], sites: Sequence[int]
) -> Dict[str, Estimate]:
    """(mean, stderr) of every Pauli string on ``sites``, group by group."""
    provider = as_provider(source)
    sites = list(sites)
    out: Dict[str, Estimate] = {}
    for group in commuting_groups(len(sites)):
        labels = [label for label in group.members if set(label) != {'I'}]
        for label, estimate in zip(labels, _expect_many(provider, [_label_to_string(lb, sites) for lb in labels])):
            out[label] = estimate
    out['I' * len(sites)] = (1.0, 0.0)
    return out


def rdm_from_expectations(values: Mapping[str, float], l: int) -> np.ndarray:
    """rho = 2^-l sum_P <P> P over all l-site strings."""
    rho = np.zeros((2 ** l, 2 ** l), dtype=np.complex128)
    for label in pauli_labels(l):
        rho += values[label] * pauli_string_matrix(label)
    return rho / 2 ** l


def tomography_rdm(
    source: Union[MPSState, ExpectationProvider], sites: Sequence[int], max_sites: int = TOMOGRAPHY_MAX_SITES
) -> ReducedDensityMatrix:
    sites = list(sites)
    if len(sites) > max_sites:
        raise ValueError(f"{len(sites)} sites exceed the tomography cap of {max_sites}")
    estimates = measure_pauli_strings(source, sites)
    rho = rdm_from_expectations({k: v for k, (v, _) in estimates.items()}, len(sites))
    return ReducedDensityMatrix.from_matrix(rho, sites)


# --- entanglement spectra ---------------------------------------------------

@dataclass
class BootstrapSpectrum:
    mean_eigenvalues: np.ndarray
    stddevs: np.ndarray
    samples: int

    def to_dict(self) -> dict:
        return {'mean_eigenvalues': [float(v) for v in self.mean_eigenvalues],
                'stddevs': [float(v) for v in self.stddevs], 'samples': self.samples}


def project_to_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex (non-negative, unit sum).

    Row order is preserved, so descending rows stay descending.
    """
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    n = values.shape[1]
    ordered = -np.sort(-values, axis=1)
    excess = np.cumsum(ordered, axis=1) - 1.0
    active = ordered - excess / np.arange(1, n + 1) > 0
    last = n - 1 - np.argmax(active[:, ::-1], axis=1)
    shift = excess[np.arange(values.shape[0]), last] / (last + 1)
    return np.maximum(values - shift[:, np.newaxis], 0.0)


def bootstrap_spectrum(
    means: Mapping[str, float],
    stderrs: Mapping[str, float],
    k: int = 1000,
    seed: int = 0,
) -> BootstrapSpectrum:
    """Eigenvalue statistics of rho under independent normal resampling of every string.

    Each sampled matrix is read in the eigenbasis of the mean matrix and its
    diagonal is kept, so eigenvalue ranks stay aligned across samples. The
    diagonals are projected onto the probability simplex, which keeps every
    sample (and so every mean) a physical spectrum even when the inputs are
    extrapolated past the physical range.
    """
    labels = sorted(means)
    l = len(labels[0])
    if len(labels) != 4 ** l:
        raise ValueError(f"expected {4 ** l} Pauli strings for l={l}, got {len(labels)}")
    mu = np.array([means[label] for label in labels], dtype=np.float64)
    sd = np.array([stderrs.get(label, 0.0) for label in labels], dtype=np.float64)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sd))):
        raise ValueError("bootstrap inputs must be finite")
    if np.any(sd < 0):
        raise ValueError("standard errors must be non-negative")

    rho = rdm_from_expectations(dict(zip(labels, mu)), l)
    rho = 0.5 * (rho + rho.conj().T)
    eigenvalues, vectors = np.linalg.eigh(rho)
    order = np.argsort(eigenvalues)[::-1]
    vectors = vectors[:, order]
    # design[k, i] = <v_i| P_k |v_i> / 2^l
    design = np.array([
        np.real(np.einsum('ai,ab,bi->i', vectors.conj(), pauli_string_matrix(label), vectors)) for label in labels
    ]) / 2 ** l
    rng = np.random.default_rng(seed)
    draws = rng.normal(mu, sd, size=(k, mu.size))
    samples = project_to_simplex(draws @ design)
    stddevs = samples.std(axis=0, ddof=1) if k > 1 else np.zeros(2 ** l)
    return BootstrapSpectrum(samples.mean(axis=0), stddevs, k)


def cut_lengths(max_l: int, cut: str) -> List[int]:
    """Segment lengths from the left end whose right boundary is a ``cut`` bond.

    A segment of l sites ends on bond l - 1, a j0 bond when l is odd.
    """
    if cut == 'j0':
        return [l for l in range(1, max_l + 1) if l % 2 == 1]
    if cut == 'j1':
        return [l for l in range(2, max_l + 1) if l % 2 == 0]
    raise ValueError(f"cut must be 'j0' or 'j1', got {cut!r}")


def spectrum_degeneracy(state: MPSState, l: int) -> float:
    """lambda_1 - lambda_2 of the l-site left segment (lambda_1 when the spectrum is pure)."""
    values = entanglement_spectrum(state, l - 1)
    return float(values[0] - values[1]) if values.size > 1 else float(values[0])
