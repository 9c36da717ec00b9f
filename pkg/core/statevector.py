# core/statevector.py
"""
Dense reference back-ends used as oracles for small chains.

Statevectors index site 0 as the most significant bit, matching
``core.mps.to_statevector``. Density matrices use the same ordering on both
indices.
"""

import itertools
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import DimensionError
from core.mps import PAULI, PauliString

DENSITY_MATRIX_MAX_SITES = 6

# The 15 non-identity two-qubit Paulis in lexicographic order (IX, IY, ..., ZZ).
TWO_QUBIT_PAULIS: List[np.ndarray] = [
    np.kron(PAULI[a], PAULI[b]) for a, b in itertools.product('IXYZ', repeat=2) if (a, b) != ('I', 'I')
]


def zero_state(n_qubits: int) -> np.ndarray:
    vec = np.zeros(2 ** n_qubits, dtype=np.complex128)
    vec[0] = 1.0
    return vec


def apply_single(vec: np.ndarray, unitary: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    psi = vec.reshape(2 ** site, 2, 2 ** (n_qubits - site - 1))
    return np.einsum('xy,ayb->axb', unitary, psi).reshape(-1)


def apply_two(vec: np.ndarray, unitary: np.ndarray, left_site: int, n_qubits: int) -> np.ndarray:
    psi = vec.reshape(2 ** left_site, 4, 2 ** (n_qubits - left_site - 2))
    return np.einsum('xy,ayb->axb', unitary, psi).reshape(-1)


def apply_controlled_x(vec: np.ndarray, control: int, target: int, n_qubits: int) -> np.ndarray:
    psi = vec.reshape([2] * n_qubits).copy()
    index = [slice(None)] * n_qubits
    index[control] = 1
    sub = psi[tuple(index)]
    axis = target if target < control else target - 1
    psi[tuple(index)] = np.flip(sub, axis=axis)
    return psi.reshape(-1)


def run_gates(gates: Iterable[Tuple[int, np.ndarray]], n_qubits: int, initial: Optional[np.ndarray] = None) -> np.ndarray:
    """Apply (left_site, 4x4 unitary) pairs in order, starting from |0...0>."""
    vec = zero_state(n_qubits) if initial is None else np.asarray(initial, dtype=np.complex128)
    for site, unitary in gates:
        vec = apply_two(vec, unitary, site, n_qubits)
    return vec


def pauli_matrix(p: PauliString, n_qubits: int) -> np.ndarray:
    if any(site >= n_qubits for site in p.sites):
        raise DimensionError(f"Pauli string {p.ops} exceeds {n_qubits} qubits")
    out = np.ones((1, 1), dtype=np.complex128)
    for site in range(n_qubits):
        out = np.kron(out, PAULI[p.ops.get(site, 'I')])
    return p.sign * out


def expectation(vec: np.ndarray, operator: np.ndarray) -> complex:
    return complex(np.vdot(vec, operator @ vec))


def partial_trace(vec: np.ndarray, sites: Sequence[int], n_qubits: int) -> np.ndarray:
    """Reduced density matrix of a contiguous block."""
    lo, hi = min(sites), max(sites)
    psi = vec.reshape(2 ** lo, 2 ** (hi - lo + 1), 2 ** (n_qubits - hi - 1))
    return np.einsum('asb,atb->st', psi, psi.conj())


def ground_state(hamiltonian: np.ndarray) -> Tuple[float, np.ndarray]:
    values, vectors = np.linalg.eigh(hamiltonian)
    return float(values[0]), vectors[:, 0]


# --- density-matrix channels ------------------------------------------------

def _embed_two(op: np.ndarray, left_site: int, n_qubits: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2 ** left_site), op), np.eye(2 ** (n_qubits - left_site - 2)))


def zz_rotation(angle: float) -> np.ndarray:
    """exp(-i angle Z x Z)."""
    return np.diag(np.exp(-1j * angle * np.array([1, -1, -1, 1]))).astype(np.complex128)


def density_matrix_expectation(
    gates: Sequence[Tuple[int, np.ndarray]],
    observable: PauliString,
    n_qubits: int,
    depolarizing: float = 0.0,
    coherent_zz: float = 0.0,
    twirled: bool = True,
    readout: Optional[Sequence[Tuple[float, float]]] = None,
) -> float:
    """Exact noisy expectation of a diagonal-basis Pauli after a gate list.

    Each gate is followed by an optional ZZ over-rotation (applied coherently,
    or as its Pauli-twirled channel when ``twirled``) and a two-qubit
    depolarizing channel of strength ``depolarizing`` spread uniformly over
    the 15 non-identity Paulis. ``readout`` holds per-qubit (p01, p10)
    assignment errors applied to the measured distribution.
    """
    if n_qubits > DENSITY_MATRIX_MAX_SITES:
        raise DimensionError(f"{n_qubits} qubits exceed the density-matrix cap of {DENSITY_MATRIX_MAX_SITES}")
    rho = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=np.complex128)
    rho[0, 0] = 1.0
    for site, unitary in gates:
        u = _embed_two(unitary, site, n_qubits)
        rho = u @ rho @ u.conj().T
        if coherent_zz:
            e = _embed_two(zz_rotation(coherent_zz), site, n_qubits)
            if twirled:
                zz = _embed_two(np.kron(PAULI['Z'], PAULI['Z']), site, n_qubits)
                rho = np.cos(coherent_zz) ** 2 * rho + np.sin(coherent_zz) ** 2 * (zz @ rho @ zz)
            else:
                rho = e @ rho @ e.conj().T
        if depolarizing:
            mixed = sum(_embed_two(p, site, n_qubits) @ rho @ _embed_two(p, site, n_qubits) for p in TWO_QUBIT_PAULIS)
            rho = (1.0 - depolarizing) * rho + depolarizing / 15.0 * mixed

    # rotate the measured qubits into the Z basis
    basis_change = {'X': np.array([[1, 1], [1, -1]]) / np.sqrt(2), 'Y': np.array([[1, -1j], [1, 1j]]) / np.sqrt(2)}
    for site, op in observable.ops.items():
        if op in basis_change:
            u = np.kron(np.kron(np.eye(2 ** site), basis_change[op]), np.eye(2 ** (n_qubits - site - 1)))
            rho = u @ rho @ u.conj().T
    probs = np.clip(np.diagonal(rho).real, 0.0, None).reshape([2] * n_qubits)
    if readout is not None:
        for site, (p01, p10) in enumerate(readout):
            confusion = np.array([[1 - p01, p10], [p01, 1 - p10]])
            probs = np.moveaxis(np.tensordot(confusion, probs, axes=([1], [site])), 0, site)
    signs = np.ones([2] * n_qubits)
    for site in observable.ops:
        shape = [1] * n_qubits
        shape[site] = 2
        signs = signs * np.array([1.0, -1.0]).reshape(shape)
    return float(observable.sign * np.sum(probs * signs))
