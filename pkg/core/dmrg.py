# core/dmrg.py
"""
Two-site DMRG against an MPO with optional total-Z sector conservation.

When a target sector is set every MPS bond carries an integer label (the
total Z of the sites to its left) and each local problem is solved only on
the entries compatible with those labels. Without a target the labels are
all zero and the same code path runs on plain dense tensors.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from core.exceptions import ConfigError, SectorViolationError
from core.lattice import MPO, S_MINUS, S_PLUS, SZ, CouplingPattern, PhaseLabel, total_z_mpo
from core.linalg import TruncationPolicy, truncation_cutoff
from core.mps import MPSState, canonicalize, mpo_expectation, product_state
from utils.logger import get_logger

logger = get_logger(__name__)

# Local problems up to this many sector-allowed entries are solved by full diagonalization.
MAX_N_FOR_ED = 400
SECTOR_TOL = 1e-10


@dataclass
class DmrgConfig:
    max_sweeps: int = 20
    policy: TruncationPolicy = field(default_factory=lambda: TruncationPolicy(100, 1e-10, 1e-12))
    mixer_enabled: bool = True
    mixer_strength: float = 1e-2
    mixer_decay: float = 0.5
    mixer_sweeps: int = 10
    energy_tol: float = 1e-10
    target_sector: Optional[int] = None
    lanczos_tol: float = 1e-12
    lanczos_maxiter: int = 200

    def __post_init__(self) -> None:
        if isinstance(self.policy, dict):
            self.policy = TruncationPolicy.from_dict(self.policy)
        if self.max_sweeps < 1:
            logger.warning(f"Invalid max_sweeps {self.max_sweeps}, using default 20")
            self.max_sweeps = 20
        if self.lanczos_maxiter < 1:
            logger.warning(f"Invalid lanczos_maxiter {self.lanczos_maxiter}, using default 200")
            self.lanczos_maxiter = 200
        for name in ('energy_tol', 'lanczos_tol', 'mixer_strength'):
            if getattr(self, name) < 0:
                raise ConfigError(f"dmrg.{name}", f"must be non-negative, got {getattr(self, name)}")
        if not 0 < self.mixer_decay <= 1:
            raise ConfigError('dmrg.mixer_decay', f"must lie in (0, 1], got {self.mixer_decay}")

    def mixer_at(self, sweep: int) -> float:
        if not self.mixer_enabled or sweep >= self.mixer_sweeps:
            return 0.0
        return self.mixer_strength * self.mixer_decay ** sweep

    def to_dict(self) -> Dict[str, Any]:
        return {
            'max_sweeps': self.max_sweeps,
            'policy': self.policy.to_dict(),
            'mixer_enabled': self.mixer_enabled,
            'mixer_strength': self.mixer_strength,
            'mixer_decay': self.mixer_decay,
            'mixer_sweeps': self.mixer_sweeps,
            'energy_tol': self.energy_tol,
            'target_sector': self.target_sector,
            'lanczos_tol': self.lanczos_tol,
            'lanczos_maxiter': self.lanczos_maxiter,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DmrgConfig':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"dmrg.{sorted(unknown)[0]}", "unknown key")
        return cls(**data)

    def update_from_dict(self, data: Dict[str, Any]) -> None:
        for key, value in data.items():
            if not hasattr(self, key):
                raise ConfigError(f"dmrg.{key}", "unknown key")
            setattr(self, key, TruncationPolicy.from_dict(value) if key == 'policy' else value)
            logger.debug(f"Updated dmrg config: {key} = {value}")
        self.__post_init__()


@dataclass
class DmrgResult:
    state: MPSState
    energy: float
    max_chi: int
    sweeps_used: int
    energy_history: List[float]
    converged: bool
    sector: Optional[float] = None
    discarded_weight: float = 0.0
    wall_time: float = 0.0

    def summary(self, c: CouplingPattern) -> Dict[str, Any]:
        return {
            'j0': c.j0,
            'j1': c.j1,
            'n_sites': c.n_sites,
            'energy': self.energy,
            'max_chi': self.max_chi,
            'sweeps_used': self.sweeps_used,
            'converged': self.converged,
            'sector': self.sector,
        }


def default_target_sector(c: CouplingPattern) -> Optional[int]:
    """Magnetization (sum Z / 2) selected for charge-conserving runs."""
    phase = c.phase
    if phase == PhaseLabel.ODD_HALDANE:
        return 1
    if phase == PhaseLabel.EVEN_HALDANE:
        return 0
    return None


def default_initial_state(c: CouplingPattern) -> MPSState:
    """Neel-like product state; odd-Haldane runs get two up edge spins."""
    if c.phase == PhaseLabel.ODD_HALDANE:
        bits = [0] + [1 - (k % 2) for k in range(c.n_sites - 2)] + [0]
    else:
        bits = [k % 2 for k in range(c.n_sites)]
    return product_state(bits)


# --- effective Hamiltonian --------------------------------------------------

def _grow_left(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum('awb,asc,wstv,btd->cvd', env, a.conj(), w, a, optimize=True)


def _grow_right(env: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum('cvd,asc,wstv,btd->awb', env, b.conj(), w, b, optimize=True)


def _apply_heff(left, w1, w2, right, theta):
    """theta has shape (chi_l, 2, 2, chi_r[, batch])."""
    x = np.einsum('awb,bpqd...->awpqd...', left, theta)
    x = np.einsum('awpqd...,wspu->asuqd...', x, w1)
    x = np.einsum('asuqd...,urqv->asrvd...', x, w2)
    return np.einsum('asrvd...,cvd->asrc...', x, right)


def _lowest_eigenpair(left, w1, w2, right, guess, mask, cfg: DmrgConfig) -> Tuple[float, np.ndarray]:
    shape = guess.shape
    allowed = np.flatnonzero(mask.ravel())
    n = allowed.size

    def matvec(v):
        full = np.zeros(guess.size, dtype=np.complex128)
        full[allowed] = np.ravel(v)
        return _apply_heff(left, w1, w2, right, full.reshape(shape)).ravel()[allowed]

    def dense_solve():
        basis = np.zeros((guess.size, n), dtype=np.complex128)
        basis[allowed, np.arange(n)] = 1.0
        h = _apply_heff(left, w1, w2, right, basis.reshape(shape + (n,))).reshape(guess.size, n)[allowed]
        values, vectors = scipy.linalg.eigh(0.5 * (h + h.conj().T))
        return values[0], vectors[:, 0]

    if n <= MAX_N_FOR_ED:
        energy, vec = dense_solve()
    else:
        v0 = guess.ravel()[allowed]
        if np.linalg.norm(v0) < 1e-12:
            v0 = np.ones(n, dtype=np.complex128)
        op = LinearOperator((n, n), matvec=matvec, dtype=np.complex128)
        try:
            values, vectors = eigsh(op, k=1, which='SA', v0=v0, tol=cfg.lanczos_tol, maxiter=cfg.lanczos_maxiter)
            energy, vec = values[0], vectors[:, 0]
        except ArpackNoConvergence as e:
            logger.warning(f"Lanczos did not converge on a local problem of size {n}, using full diagonalization")
            energy, vec = dense_solve()

    theta = np.zeros(guess.size, dtype=np.complex128)
    theta[allowed] = vec / np.linalg.norm(vec)
    return float(np.real(energy)), theta.reshape(shape)


# --- charge-blocked split ---------------------------------------------------

_MIXER_OPS = (SZ, S_PLUS, S_MINUS)


def _split(theta, q_left, q_right, z, policy: TruncationPolicy, alpha: float, move_right: bool):
    """Split a two-site tensor block by block in the bond charge.

    Returns (left tensor, right tensor, middle bond charges, discarded weight).
    The orthogonality centre lands on the right tensor when moving right and
    on the left tensor otherwise.
    """
    chi_l, _, _, chi_r = theta.shape
    m = theta.reshape(chi_l * 2, 2 * chi_r)
    row_q = (q_left[:, np.newaxis] + z[np.newaxis, :]).ravel()
    col_q = (q_right[np.newaxis, :] - z[:, np.newaxis]).ravel()

    mixed = []
    if alpha > 0:
        for op in _MIXER_OPS:
            if move_right:
                p = np.einsum('xs,asb->axb', op, theta.reshape(chi_l, 2, -1)).reshape(m.shape)
            else:
                p = np.einsum('xt,atb->axb', op, theta.reshape(chi_l * 2, 2, chi_r)).reshape(m.shape)
            mixed.append(np.sqrt(alpha) * p)

    pieces = []  # (value, charge, vector on rows or cols, partner vector or None)
    for charge in np.unique(row_q if move_right or alpha == 0 else col_q):
        rows = np.flatnonzero(row_q == charge)
        cols = np.flatnonzero(col_q == charge)
        if alpha == 0:
            if rows.size == 0 or cols.size == 0:
                continue
            u, s, vh = scipy.linalg.svd(m[np.ix_(rows, cols)], full_matrices=False, lapack_driver='gesvd')
            for k in range(s.size):
                pieces.append((s[k], charge, (rows, u[:, k]), (cols, vh[k])))
        elif move_right:
            rho = sum(x[rows] @ x[rows].conj().T for x in [m] + mixed)
            w, v = scipy.linalg.eigh(rho)
            for k in range(w.size):
                pieces.append((np.sqrt(max(w[k], 0.0)), charge, (rows, v[:, k]), None))
        else:
            if cols.size == 0:
                continue
            rho = sum(x[:, cols].conj().T @ x[:, cols] for x in [m] + mixed)
            w, v = scipy.linalg.eigh(rho)
            for k in range(w.size):
                pieces.append((np.sqrt(max(w[k], 0.0)), charge, (cols, v[:, k]), None))

    values = np.array([p[0] for p in pieces])
    order = np.argsort(-values, kind='stable')
    keep, discarded, _ = truncation_cutoff(values[order], policy)
    chosen = [pieces[j] for j in order[:keep]]
    q_mid = np.array([p[1] for p in chosen], dtype=np.int64)

    if alpha == 0:
        u = np.zeros((m.shape[0], keep), dtype=np.complex128)
        vh = np.zeros((keep, m.shape[1]), dtype=np.complex128)
        s = np.array([p[0] for p in chosen])
        for k, (_, _, (rows, uk), (cols, vk)) in enumerate(chosen):
            u[rows, k] = uk
            vh[k, cols] = vk
        if move_right:
            left, right = u, s[:, np.newaxis] * vh
        else:
            left, right = u * s[np.newaxis, :], vh
    elif move_right:
        u = np.zeros((m.shape[0], keep), dtype=np.complex128)
        for k, (_, _, (rows, vk), _) in enumerate(chosen):
            u[rows, k] = vk
        left, right = u, u.conj().T @ m
    else:
        vh = np.zeros((keep, m.shape[1]), dtype=np.complex128)
        for k, (_, _, (cols, vk), _) in enumerate(chosen):
            vh[k, cols] = vk.conj()
        left, right = m @ vh.conj().T, vh

    center = right if move_right else left
    nrm = np.linalg.norm(center)
    if move_right:
        right = right / nrm
    else:
        left = left / nrm
    return left.reshape(chi_l, 2, keep), right.reshape(keep, 2, chi_r), q_mid, discarded


# --- driver -----------------------------------------------------------------

def _product_charges(state: MPSState, z: np.ndarray) -> List[np.ndarray]:
    if state.max_bond_dimension() != 1:
        raise ValueError("charge-conserving runs must start from a product state")
    charges = [np.zeros(1, dtype=np.int64)]
    for i, t in enumerate(state.tensors):
        amps = np.abs(t.reshape(2))
        if np.count_nonzero(amps > 1e-12) != 1:
            raise ValueError(f"site {i} of the initial state is not a computational basis state")
        charges.append(charges[-1] + z[int(np.argmax(amps))])
    return charges


def run_dmrg(mpo: MPO, initial: MPSState, cfg: Optional[DmrgConfig] = None) -> DmrgResult:
    """Variational ground-state search by two-site sweeps.

    With ``cfg.target_sector`` set, the initial state must be a product of
    basis states whose magnetization sum(Z)/2 equals the target; the total Z
    is then checked after every sweep.
    """
    cfg = cfg or DmrgConfig()
    n = initial.n_sites
    if mpo.n_sites != n:
        raise ValueError(f"MPO has {mpo.n_sites} sites but the initial state has {n}")
    start = time.perf_counter()

    if cfg.target_sector is not None:
        z = np.array([1, -1], dtype=np.int64)
        charges = _product_charges(initial, z)
        if charges[-1][0] != 2 * cfg.target_sector:
            raise ValueError(
                f"initial state has magnetization {charges[-1][0] / 2} but the target sector is {cfg.target_sector}"
            )
        state = initial
        z_mpo = total_z_mpo(n)
    else:
        z = np.zeros(2, dtype=np.int64)
        state = canonicalize(initial, 0)
        charges = [np.zeros(1, dtype=np.int64)] + [np.zeros(d, dtype=np.int64) for d in state.bond_dimensions()]
        charges.append(np.zeros(1, dtype=np.int64))
        z_mpo = None
    if state.ortho_center != 0:
        state = canonicalize(state, 0)

    tensors = list(state.tensors)
    w = mpo.tensors
    right_env: List[Optional[np.ndarray]] = [None] * n
    right_env[n - 1] = np.ones((1, 1, 1), dtype=np.complex128)
    for j in range(n - 1, 0, -1):
        right_env[j - 1] = _grow_right(right_env[j], tensors[j], w[j])
    left_env: List[Optional[np.ndarray]] = [None] * n
    left_env[0] = np.ones((1, 1, 1), dtype=np.complex128)

    history: List[float] = []
    converged = False
    mixer_off_from: Optional[int] = None
    total_discarded = 0.0
    sweeps_used = 0

    for sweep in range(cfg.max_sweeps):
        alpha = cfg.mixer_at(sweep) if mixer_off_from is None else 0.0
        sweep_discarded = 0.0
        energy = np.nan

        def update(i: int, move_right: bool) -> None:
            nonlocal energy, sweep_discarded
            guess = np.einsum('asb,btc->astc', tensors[i], tensors[i + 1])
            q_l, q_r = charges[i], charges[i + 2]
            mask = (q_l[:, None, None, None] + z[None, :, None, None] + z[None, None, :, None]) == q_r[None, None, None, :]
            energy, theta = _lowest_eigenpair(left_env[i], w[i], w[i + 1], right_env[i + 1], guess, mask, cfg)
            a, b, q_mid, discarded = _split(theta, q_l, q_r, z, cfg.policy, alpha, move_right)
            tensors[i], tensors[i + 1] = a, b
            charges[i + 1] = q_mid
            sweep_discarded += discarded
            if move_right:
                left_env[i + 1] = _grow_left(left_env[i], a, w[i])
            else:
                right_env[i] = _grow_right(right_env[i + 1], b, w[i + 1])

        for i in range(n - 1):
            update(i, True)
        for i in range(n - 2, -1, -1):
            update(i, False)

        sweeps_used = sweep + 1
        total_discarded += sweep_discarded
        history.append(energy)
        state = MPSState(list(tensors), ortho_center=0)
        logger.info(
            f"DMRG sweep {sweeps_used}: E={energy:.12f}, max chi={state.max_bond_dimension()}, "
            f"discarded={sweep_discarded:.3e}, mixer={alpha:.1e}"
        )

        if z_mpo is not None:
            total_z = mpo_expectation(state, z_mpo)
            if abs(total_z - 2 * cfg.target_sector) > SECTOR_TOL:
                raise SectorViolationError(
                    f"sweep {sweeps_used} moved total Z to {total_z:.12f}, expected {2 * cfg.target_sector}"
                )

        if len(history) >= 2 and abs(history[-2] - history[-1]) < cfg.energy_tol:
            if alpha == 0.0:
                converged = True
                break
            logger.info(f"DMRG energy settled at sweep {sweeps_used}, switching the mixer off")
            mixer_off_from = sweep + 1

    energy = mpo_expectation(state, mpo)
    if not converged:
        logger.warning(f"DMRG stopped after {sweeps_used} sweeps without reaching energy_tol={cfg.energy_tol}")
    sector = mpo_expectation(state, z_mpo or total_z_mpo(n)) / 2
    result = DmrgResult(
        state=state,
        energy=energy,
        max_chi=state.max_bond_dimension(),
        sweeps_used=sweeps_used,
        energy_history=history,
        converged=converged,
        sector=sector,
        discarded_weight=total_discarded,
        wall_time=time.perf_counter() - start,
    )
    logger.info(f"DMRG finished: E={energy:.10f}, max chi={result.max_chi}, sector={sector:+.6f}, converged={converged}")
    return result
