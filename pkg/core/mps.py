# core/mps.py
"""
Open-boundary matrix product states.

Conventions:
  * site tensors have shape (chi_left, 2, chi_right); boundary bonds are 1;
  * physical index 0 is |0> (spin up, Z = +1), 1 is |1>;
  * site 0 is the most significant bit of a statevector index.

States are values: every operation returns a new MPSState and never mutates
the arrays of its input.
"""

from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import DimensionError, NonUnitaryGateError, NumericalError
from core.linalg import (
    TruncationPolicy,
    is_unitary,
    qr_positive,
    svd_truncate,
    tensor_from_entries,
    tensor_to_entries,
)
from utils.logger import get_logger

logger = get_logger(__name__)

MPS_FORMAT_VERSION = 1
STATEVECTOR_MAX_SITES = 14
RDM_MAX_SITES = 8

PAULI = {
    'I': np.eye(2, dtype=np.complex128),
    'X': np.array([[0, 1], [1, 0]], dtype=np.complex128),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    'Z': np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class PauliString:
    """Sparse Pauli operator: ``sign`` times the tensor product of ``ops``."""

    ops: Mapping[int, str]
    sign: int = 1

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        clean = {}
        for site, op in self.ops.items():
            if op not in ('X', 'Y', 'Z', 'I'):
                raise ValueError(f"unknown Pauli '{op}' on site {site}")
            if int(site) < 0:
                raise ValueError(f"negative site index {site}")
            if op != 'I':
                clean[int(site)] = op
        object.__setattr__(self, 'ops', dict(sorted(clean.items())))

    def __hash__(self) -> int:
        return hash((tuple(self.ops.items()), self.sign))

    @classmethod
    def from_label(cls, label: str, start: int = 0, sign: int = 1) -> 'PauliString':
        """'XIZ' at start=3 is X on site 3 and Z on site 5."""
        return cls({start + k: c for k, c in enumerate(label.upper()) if c != 'I'}, sign)

    @classmethod
    def z_string(cls, start: int, length: int, sign: int = 1) -> 'PauliString':
        return cls({start + k: 'Z' for k in range(length)}, sign)

    @property
    def sites(self) -> List[int]:
        return list(self.ops.keys())

    @property
    def is_identity(self) -> bool:
        return not self.ops

    def label(self, sites: Sequence[int]) -> str:
        return ''.join(self.ops.get(s, 'I') for s in sites)

    def is_diagonal(self) -> bool:
        return all(op == 'Z' for op in self.ops.values())

    def to_dict(self) -> dict:
        return {'ops': {str(k): v for k, v in self.ops.items()}, 'sign': self.sign}


@dataclass
class ReducedDensityMatrix:
    sites: Tuple[int, ...]
    entries: np.ndarray
    spectrum: np.ndarray
    asymmetry: float = 0.0

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_matrix(cls, rho: np.ndarray, sites: Sequence[int] = ()) -> 'ReducedDensityMatrix':
        """Symmetrize ``rho``, then clip its eigenvalues to [0, 1] and sort them descending."""
        rho = np.asarray(rho, dtype=np.complex128)
        asymmetry = float(np.linalg.norm(rho - rho.conj().T))
        if asymmetry > 1e-10:
            logger.debug(f"density matrix on sites {tuple(sites)} has Hermitian asymmetry {asymmetry:.3e}")
        rho = 0.5 * (rho + rho.conj().T)
        eigenvalues = np.clip(np.linalg.eigvalsh(rho), 0.0, 1.0)[::-1]
        return cls(tuple(sites), rho, np.ascontiguousarray(eigenvalues), asymmetry)


@dataclass
class MPSState:
    tensors: List[np.ndarray]
    ortho_center: Optional[int] = None
    truncation_error: float = 0.0

    def __post_init__(self) -> None:
        if not self.tensors:
            raise DimensionError("an MPS needs at least one site")
        self.tensors = [np.asarray(t, dtype=np.complex128) for t in self.tensors]
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise DimensionError(f"site {i} tensor has shape {t.shape}, expected (l, 2, r)")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise DimensionError("boundary bond dimensions must be 1")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[2] != self.tensors[i + 1].shape[0]:
                raise DimensionError(
                    f"bond {i}: right extent {self.tensors[i].shape[2]} != left extent {self.tensors[i + 1].shape[0]}"
                )
        if self.ortho_center is not None and not 0 <= self.ortho_center < len(self.tensors):
            raise ValueError(f"orthogonality centre {self.ortho_center} outside the chain")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dimensions(self) -> List[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def max_bond_dimension(self) -> int:
        dims = self.bond_dimensions()
        return max(dims) if dims else 1

    def copy(self) -> 'MPSState':
        return MPSState(list(self.tensors), self.ortho_center, self.truncation_error)

    def _replace(self, tensors: List[np.ndarray], center: Optional[int], error: Optional[float] = None) -> 'MPSState':
        return MPSState(tensors, center, self.truncation_error if error is None else error)


# --- constructors -----------------------------------------------------------

def product_state(local_states: Sequence[Union[int, Sequence[complex]]]) -> MPSState:
    """Product state from bits (0/1) or normalized single-site vectors."""
    tensors = []
    for local in local_states:
        if np.isscalar(local):
            if local not in (0, 1):
                raise ValueError(f"bit values must be 0 or 1, got {local}")
            vec = np.zeros(2, dtype=np.complex128)
            vec[int(local)] = 1.0
        else:
            vec = np.asarray(local, dtype=np.complex128).reshape(2)
            vec = vec / np.linalg.norm(vec)
        tensors.append(vec.reshape(1, 2, 1))
    return MPSState(tensors, ortho_center=0)


def random_mps(n_sites: int, chi: int, rng: np.random.Generator) -> MPSState:
    """Normalized random state with bonds min(chi, 2^i, 2^(N-i))."""
    dims = [1] + [min(chi, 2 ** min(b, n_sites - b)) for b in range(1, n_sites)] + [1]
    tensors = [
        rng.standard_normal((dims[i], 2, dims[i + 1])) + 1j * rng.standard_normal((dims[i], 2, dims[i + 1]))
        for i in range(n_sites)
    ]
    return normalize(canonicalize(MPSState(tensors), 0))


def from_statevector(vector: np.ndarray, policy: Optional[TruncationPolicy] = None) -> MPSState:
    """Split a 2^N amplitude vector into an MPS by successive SVDs."""
    vector = np.asarray(vector, dtype=np.complex128).ravel()
    n_sites = int(round(np.log2(vector.size)))
    if 2 ** n_sites != vector.size:
        raise DimensionError(f"vector length {vector.size} is not a power of two")
    policy = policy or TruncationPolicy.unlimited()
    tensors = []
    rest = vector.reshape(1, -1)
    for _ in range(n_sites - 1):
        chi_left = rest.shape[0]
        split = svd_truncate(rest.reshape(chi_left * 2, -1), policy)
        tensors.append(split.u.reshape(chi_left, 2, -1))
        rest = split.s[:, np.newaxis] * split.vh
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MPSState(tensors, ortho_center=n_sites - 1)


# --- gauge ------------------------------------------------------------------

def _move_right(tensors: List[np.ndarray], i: int) -> None:
    chi_l, d, chi_r = tensors[i].shape
    q, r = qr_positive(tensors[i].reshape(chi_l * d, chi_r))
    tensors[i] = q.reshape(chi_l, d, -1)
    tensors[i + 1] = np.einsum('ab,bsc->asc', r, tensors[i + 1])


def _move_left(tensors: List[np.ndarray], i: int) -> None:
    chi_l, d, chi_r = tensors[i].shape
    q, r = qr_positive(tensors[i].reshape(chi_l, d * chi_r).conj().T)
    tensors[i] = q.conj().T.reshape(-1, d, chi_r)
    tensors[i - 1] = np.einsum('asb,bc->asc', tensors[i - 1], r.conj().T)


def canonicalize(state: MPSState, center: int) -> MPSState:
    """Mixed-canonical form with the orthogonality centre on ``center``."""
    n = state.n_sites
    if not 0 <= center < n:
        raise ValueError(f"centre {center} outside chain of {n} sites")
    tensors = list(state.tensors)
    if state.ortho_center is None:
        for i in range(center):
            _move_right(tensors, i)
        for i in range(n - 1, center, -1):
            _move_left(tensors, i)
    else:
        for i in range(state.ortho_center, center):
            _move_right(tensors, i)
        for i in range(state.ortho_center, center, -1):
            _move_left(tensors, i)
    return state._replace(tensors, center)


def center_within(state: MPSState, lo: int, hi: int) -> MPSState:
    """Move the centre into [lo, hi] with as few steps as possible."""
    c = state.ortho_center
    if c is not None and lo <= c <= hi:
        return state
    target = lo if c is None else min(max(c, lo), hi)
    return canonicalize(state, target)


def is_canonical(state: MPSState, tol: float = 1e-10) -> bool:
    if state.ortho_center is None:
        return False
    for i in range(state.ortho_center):
        a = state.tensors[i].reshape(-1, state.tensors[i].shape[2])
        if np.linalg.norm(a.conj().T @ a - np.eye(a.shape[1])) > tol:
            return False
    for i in range(state.ortho_center + 1, state.n_sites):
        b = state.tensors[i].reshape(state.tensors[i].shape[0], -1)
        if np.linalg.norm(b @ b.conj().T - np.eye(b.shape[0])) > tol:
            return False
    return True


# --- norms and overlaps -----------------------------------------------------

def overlap(a: MPSState, b: MPSState) -> complex:
    """<a|b>, conjugating ``a``."""
    if a.n_sites != b.n_sites:
        raise DimensionError(f"chain lengths differ: {a.n_sites} vs {b.n_sites}")
    env = np.ones((1, 1), dtype=np.complex128)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.einsum('ab,asc,bsd->cd', env, ta.conj(), tb)
    return complex(env[0, 0])


def norm(state: MPSState) -> float:
    if state.ortho_center is not None:
        return float(np.linalg.norm(state.tensors[state.ortho_center]))
    return float(np.sqrt(max(overlap(state, state).real, 0.0)))


def normalize(state: MPSState) -> MPSState:
    nrm = norm(state)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise NumericalError(f"cannot normalize a state of norm {nrm}", {'norm': nrm})
    site = state.ortho_center if state.ortho_center is not None else 0
    tensors = list(state.tensors)
    tensors[site] = tensors[site] / nrm
    return state._replace(tensors, state.ortho_center)


def fidelity(a: MPSState, b: MPSState) -> float:
    """|<a|b>|^2 with both states normalized on the fly."""
    ov = overlap(a, b)
    na2 = norm(a) ** 2
    nb2 = norm(b) ** 2
    return float(np.clip(abs(ov) ** 2 / (na2 * nb2), 0.0, 1.0))


# --- local expectations -----------------------------------------------------

def expect_operator_window(state: MPSState, site_ops: Mapping[int, np.ndarray]) -> complex:
    """<psi| prod_i O_i |psi> for single-site operators on arbitrary sites.

    The centre is moved into the support window so that only the window is
    contracted; the result is divided by the squared norm.
    """
    if not site_ops:
        return 1.0 + 0.0j
    sites = sorted(site_ops)
    lo, hi = sites[0], sites[-1]
    if lo < 0 or hi >= state.n_sites:
        raise ValueError(f"operator support [{lo}, {hi}] outside chain of {state.n_sites} sites")
    state = center_within(state, lo, hi)
    t = state.tensors[lo]
    env = np.eye(t.shape[0], dtype=np.complex128)
    for i in range(lo, hi + 1):
        t = state.tensors[i]
        op = site_ops.get(i)
        ket = t if op is None else np.einsum('st,atb->asb', op, t)
        env = np.einsum('ab,asc,bsd->cd', env, t.conj(), ket)
    return complex(np.trace(env)) / norm(state) ** 2


def expect_pauli(state: MPSState, p: PauliString) -> float:
    """sign * <psi|P|psi>; an imaginary residue above 1e-9 is logged."""
    for site in p.sites:
        if site >= state.n_sites:
            raise ValueError(f"Pauli site {site} outside chain of {state.n_sites} sites")
    value = p.sign * expect_operator_window(state, {s: PAULI[op] for s, op in p.ops.items()})
    if abs(value.imag) > 1e-9:
        logger.warning(f"Pauli expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def mpo_expectation(state: MPSState, mpo) -> float:
    """<psi|W|psi>/<psi|psi> for an MPO with tensors (wl, out, in, wr)."""
    tensors = mpo.tensors if hasattr(mpo, 'tensors') else mpo
    if len(tensors) != state.n_sites:
        raise DimensionError(f"MPO has {len(tensors)} sites, state has {state.n_sites}")
    env = np.ones((1, 1, 1), dtype=np.complex128)
    for a, w in zip(state.tensors, tensors):
        env = np.einsum('awb,asc,wstv,btd->cvd', env, a.conj(), w, a, optimize=True)
    return float(env[0, 0, 0].real) / norm(state) ** 2


def reduced_density_matrix(state: MPSState, sites: Sequence[int], cap: int = RDM_MAX_SITES) -> ReducedDensityMatrix:
    """Partial trace onto a contiguous block of sites."""
    sites = list(sites)
    if not sites:
        raise ValueError("empty site range")
    lo, hi = min(sites), max(sites)
    if sorted(sites) != list(range(lo, hi + 1)):
        raise ValueError(f"sites {sites} are not a contiguous range")
    if len(sites) > cap:
        raise ValueError(f"{len(sites)} sites exceed the reduced density matrix cap of {cap}")
    if lo < 0 or hi >= state.n_sites:
        raise ValueError(f"sites [{lo}, {hi}] outside chain of {state.n_sites} sites")
    state = center_within(state, lo, hi)
    block = state.tensors[lo]
    for i in range(lo + 1, hi + 1):
        block = np.einsum('apb,bsc->apsc', block, state.tensors[i]).reshape(block.shape[0], -1, state.tensors[i].shape[2])
    rho = np.einsum('asb,atb->st', block, block.conj()) / norm(state) ** 2
    return ReducedDensityMatrix.from_matrix(rho, sites)


def entanglement_spectrum(state: MPSState, bond: int) -> np.ndarray:
    """Squared Schmidt values across the cut between sites ``bond`` and ``bond + 1``."""
    if not 0 <= bond < state.n_sites - 1:
        raise ValueError(f"bond {bond} outside [0, {state.n_sites - 2}]")
    state = canonicalize(state, bond)
    t = state.tensors[bond]
    s = np.linalg.svd(t.reshape(-1, t.shape[2]), compute_uv=False)
    weights = s ** 2 / np.sum(s ** 2)
    return weights[weights > 1e-15]


# --- circuit application ----------------------------------------------------

def apply_single_qubit_gate(state: MPSState, unitary: np.ndarray, site: int) -> MPSState:
    if not 0 <= site < state.n_sites:
        raise ValueError(f"site {site} outside chain of {state.n_sites} sites")
    unitary = np.asarray(unitary, dtype=np.complex128)
    if unitary.shape != (2, 2):
        raise DimensionError(f"single-qubit gate must be 2x2, got {unitary.shape}")
    tensors = list(state.tensors)
    tensors[site] = np.einsum('st,atb->asb', unitary, tensors[site])
    center = state.ortho_center if is_unitary(unitary) or state.ortho_center == site else None
    return state._replace(tensors, center)


def apply_two_qubit_gate(
    state: MPSState, unitary: np.ndarray, left_site: int, policy: Optional[TruncationPolicy] = None
) -> MPSState:
    """Apply a 4x4 unitary to sites (left_site, left_site + 1) and re-split.

    The kept Schmidt values are rescaled to the pre-truncation norm; the
    dropped squared weight is added to ``truncation_error``. The centre ends
    on ``left_site + 1``.
    """
    i = left_site
    if not 0 <= i < state.n_sites - 1:
        raise ValueError(f"gate on ({i}, {i + 1}) outside chain of {state.n_sites} sites")
    unitary = np.asarray(unitary, dtype=np.complex128)
    if unitary.shape != (4, 4):
        raise DimensionError(f"two-qubit gate must be 4x4, got {unitary.shape}")
    if not is_unitary(unitary, 1e-8):
        raise NonUnitaryGateError(f"gate on ({i}, {i + 1}) is not unitary within 1e-8")
    policy = policy or TruncationPolicy.unlimited()

    state = center_within(state, i, i + 1)
    theta = np.einsum('asb,btc->astc', state.tensors[i], state.tensors[i + 1])
    theta = np.einsum('xyst,astc->axyc', unitary.reshape(2, 2, 2, 2), theta)
    chi_l, chi_r = theta.shape[0], theta.shape[3]
    split = svd_truncate(theta, policy, split=2)
    s = split.s
    if split.discarded_weight > 0.0:
        kept = float(np.sum(s ** 2))
        s = s * np.sqrt((kept + split.discarded_weight) / kept)

    tensors = list(state.tensors)
    tensors[i] = split.u.reshape(chi_l, 2, -1)
    tensors[i + 1] = (s[:, np.newaxis] * split.vh).reshape(-1, 2, chi_r)
    return state._replace(tensors, i + 1, state.truncation_error + split.discarded_weight)


# --- dense views ------------------------------------------------------------

def to_statevector(state: MPSState) -> np.ndarray:
    if state.n_sites > STATEVECTOR_MAX_SITES:
        raise DimensionError(f"{state.n_sites} sites exceed the statevector cap of {STATEVECTOR_MAX_SITES}")
    psi = state.tensors[0].reshape(2, -1)
    for t in state.tensors[1:]:
        psi = np.einsum('pa,asb->psb', psi, t).reshape(-1, t.shape[2])
    return psi.reshape(-1)


def sample_bitstrings(
    state: MPSState, sites: Sequence[int], shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``shots`` computational-basis outcomes on ``sites`` (in ascending order).

    Sites between the first and last requested one that are not requested
    are traced out. Returns an int8 array of shape (shots, len(sites)).
    """
    wanted = sorted(set(sites))
    if not wanted:
        return np.zeros((shots, 0), dtype=np.int8)
    lo, hi = wanted[0], wanted[-1]
    if lo < 0 or hi >= state.n_sites:
        raise ValueError(f"sites [{lo}, {hi}] outside chain of {state.n_sites} sites")
    state = normalize(canonicalize(state, lo))
    chi = state.tensors[lo].shape[0]
    env = np.broadcast_to(np.eye(chi, dtype=np.complex128), (shots, chi, chi))
    outcomes = np.zeros((shots, len(wanted)), dtype=np.int8)
    column = 0
    for i in range(lo, hi + 1):
        a = state.tensors[i]
        branch = np.einsum('asc,nab,bsd->nscd', a.conj(), env, a, optimize=True)
        if i != wanted[column]:
            env = branch.sum(axis=1)
            continue
        probs = np.maximum(np.einsum('nscc->ns', branch).real, 0.0)
        p1 = probs[:, 1] / np.maximum(probs.sum(axis=1), 1e-300)
        bits = (rng.random(shots) < p1).astype(np.int8)
        chosen = probs[np.arange(shots), bits]
        env = branch[np.arange(shots), bits] / np.maximum(chosen, 1e-300)[:, np.newaxis, np.newaxis]
        outcomes[:, column] = bits
        column += 1
    return outcomes


# --- serialization ----------------------------------------------------------

def state_to_dict(state: MPSState) -> dict:
    return {
        'version': MPS_FORMAT_VERSION,
        'n_sites': state.n_sites,
        'ortho_center': state.ortho_center,
        'tensors': [{'shape': list(t.shape), 'data': tensor_to_entries(t)} for t in state.tensors],
    }


def state_from_dict(data: dict) -> MPSState:
    version = data.get('version')
    if version != MPS_FORMAT_VERSION:
        raise ValueError(f"unsupported MPS format version {version}")
    tensors = [tensor_from_entries(t['shape'], t['data']) for t in data['tensors']]
    if len(tensors) != data['n_sites']:
        raise DimensionError(f"document declares {data['n_sites']} sites but holds {len(tensors)} tensors")
    return MPSState(tensors, data.get('ortho_center'))


# --- compression ------------------------------------------------------------

def add_states(terms: Sequence[Tuple[complex, MPSState]]) -> MPSState:
    """Sum of weighted states as one MPS whose bonds are the direct sums of the inputs'."""
    if not terms:
        raise ValueError("nothing to add")
    n = terms[0][1].n_sites
    if any(state.n_sites != n for _, state in terms):
        raise DimensionError("all terms must have the same number of sites")
    if n == 1:
        return MPSState([sum(c * state.tensors[0] for c, state in terms)])

    tensors = [np.concatenate([c * state.tensors[0] for c, state in terms], axis=2)]
    for i in range(1, n - 1):
        blocks = [state.tensors[i] for _, state in terms]
        out = np.zeros((sum(b.shape[0] for b in blocks), 2, sum(b.shape[2] for b in blocks)), dtype=np.complex128)
        row = col = 0
        for b in blocks:
            out[row:row + b.shape[0], :, col:col + b.shape[2]] = b
            row += b.shape[0]
            col += b.shape[2]
        tensors.append(out)
    tensors.append(np.concatenate([state.tensors[n - 1] for _, state in terms], axis=0))
    return MPSState(tensors)


def truncate(state: MPSState, policy: TruncationPolicy) -> MPSState:
    """Right-to-left SVD sweep over a left-canonical copy; the norm is kept and the centre ends at 0."""
    tensors = list(canonicalize(state, state.n_sites - 1).tensors)
    discarded = 0.0
    for i in range(state.n_sites - 1, 0, -1):
        chi_l, d, chi_r = tensors[i].shape
        split = svd_truncate(tensors[i].reshape(chi_l, d * chi_r), policy)
        tensors[i] = split.vh.reshape(-1, d, chi_r)
        tensors[i - 1] = np.einsum('asb,bk->ask', tensors[i - 1], split.u * split.s[np.newaxis, :])
        discarded += split.discarded_weight
    return MPSState(tensors, ortho_center=0, truncation_error=state.truncation_error + discarded)


def _svd_seed(state: MPSState, chi: int) -> MPSState:
    return normalize(truncate(state, TruncationPolicy(chi_max=chi, svd_min=0.0, trunc_cut=0.0)))


def compress(state: MPSState, target_chi: int, sweeps: int = 10, tol: float = 1e-10) -> Tuple[MPSState, float]:
    """Variational compression to bond dimension ``target_chi``.

    Seeded by SVD truncation, then improved by two-site sweeps that maximize
    the overlap with the input. Stops early once a full sweep gains less than
    ``tol`` in fidelity. Returns the normalized state and its fidelity with
    the input.
    """
    if target_chi < 1:
        raise ValueError(f"target bond dimension must be positive, got {target_chi}")
    target = normalize(canonicalize(state, 0))
    if target.max_bond_dimension() <= target_chi:
        return target, 1.0

    n = target.n_sites
    approx = _svd_seed(target, target_chi)
    best = fidelity(target, approx)
    logger.debug(f"compress: SVD seed at chi={target_chi} has fidelity {best:.12f}")
    policy = TruncationPolicy(chi_max=target_chi, svd_min=0.0, trunc_cut=0.0)
    phi = list(approx.tensors)
    psi = target.tensors

    right = [None] * n
    right[n - 1] = np.ones((1, 1), dtype=np.complex128)
    for j in range(n - 1, 0, -1):
        right[j - 1] = np.einsum('asc,bsd,cd->ab', phi[j].conj(), psi[j], right[j])
    left = [None] * n
    left[0] = np.ones((1, 1), dtype=np.complex128)

    def local_theta(i: int) -> np.ndarray:
        return np.einsum('ab,bsc,ctd,ed->aste', left[i], psi[i], psi[i + 1], right[i + 1], optimize=True)

    for sweep in range(sweeps):
        for i in range(n - 1):
            theta = local_theta(i)
            split = svd_truncate(theta, policy, split=2)
            phi[i] = split.u.reshape(theta.shape[0], 2, -1)
            phi[i + 1] = (split.s[:, np.newaxis] * split.vh).reshape(-1, 2, theta.shape[3])
            left[i + 1] = np.einsum('ab,asc,bsd->cd', left[i], phi[i].conj(), psi[i])
        for i in range(n - 2, -1, -1):
            theta = local_theta(i)
            split = svd_truncate(theta, policy, split=2)
            phi[i] = (split.u * split.s[np.newaxis, :]).reshape(theta.shape[0], 2, -1)
            phi[i + 1] = split.vh.reshape(-1, 2, theta.shape[3])
            right[i] = np.einsum('asc,bsd,cd->ab', phi[i + 1].conj(), psi[i + 1], right[i + 1])
        approx = normalize(MPSState(list(phi), ortho_center=0))
        current = fidelity(target, approx)
        gain = current - best
        best = max(best, current)
        logger.debug(f"compress sweep {sweep + 1}: fidelity {current:.12f}")
        if gain < tol:
            break
    return approx, fidelity(target, approx)
