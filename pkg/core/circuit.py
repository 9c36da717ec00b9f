# core/circuit.py
"""
Brickwork circuits of 15-parameter Cartan gates.

Parameter layout of one gate (indices 0..14):

    0-2   pre-rotation, left qubit    (alpha, beta, gamma)
    3-5   pre-rotation, right qubit
    6-8   interaction angles a, b, c
    9-11  post-rotation, left qubit
    12-14 post-rotation, right qubit

    U = (R(post_l) x R(post_r)) exp(i(a XX + b YY + c ZZ)) (R(pre_l) x R(pre_r)),
    R(alpha, beta, gamma) = Rz(alpha) Rx(beta) Rz(gamma),  Rz(t) = exp(-i t Z / 2).

All-zero parameters give the identity. Half-layers are stored in time
order: half-layer 0 acts first on |0...0>. Half-layer h is even-aligned
(pairs (0,1), (2,3), ...) when h is even and odd-aligned otherwise.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import DimensionError
from core.lattice import PhaseLabel
from core.linalg import TruncationPolicy
from core.mps import MPSState, apply_two_qubit_gate, product_state
from core import statevector
from utils.logger import get_logger

logger = get_logger(__name__)

PARAMS_PER_GATE = 15
PRE_L, PRE_R, CORE, POST_L, POST_R = slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12), slice(12, 15)
CNOTS_PER_GATE = 3
CIRCUIT_FORMAT_VERSION = 1

_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)
_XX, _YY, _ZZ = np.kron(_X, _X), np.kron(_Y, _Y), np.kron(_Z, _Z)
_I4 = np.eye(4, dtype=np.complex128)

# Magic basis; E^dagger U E maps SU(2) x SU(2) onto SO(4).
MAGIC = np.array([[1, 1j, 0, 0], [0, 0, 1j, 1], [0, 0, 1j, -1], [1, -1j, 0, 0]]) / np.sqrt(2)

# Parameters of the gate taking |00> to (|01> - |10>)/sqrt(2), up to phase.
SINGLET_GATE_PARAMS = np.zeros(PARAMS_PER_GATE)
SINGLET_GATE_PARAMS[6] = np.pi / 4
SINGLET_GATE_PARAMS[9] = np.pi / 2
SINGLET_GATE_PARAMS[13] = np.pi


@dataclass
class CartanGate:
    left_site: int
    params: np.ndarray = field(default_factory=lambda: np.zeros(PARAMS_PER_GATE))


@dataclass
class HalfLayer:
    alignment: str
    sites: List[int]


@dataclass
class CircuitMetrics:
    cnot_depth: int
    cnot_count: int
    parameter_count: int

    def to_dict(self) -> Dict[str, int]:
        return {'cnot_depth': self.cnot_depth, 'cnot_count': self.cnot_count, 'parameter_count': self.parameter_count}


@dataclass
class BrickworkCircuit:
    """Gate skeleton; parameters travel separately as a full-layout vector."""

    n_qubits: int
    half_layers: List[HalfLayer]
    total_layers: float
    init_layer: Optional[PhaseLabel] = None
    init_half_layer: Optional[int] = None

    def __post_init__(self) -> None:
        for h, layer in enumerate(self.half_layers):
            if len(set(layer.sites)) != len(layer.sites):
                raise ValueError(f"half-layer {h} repeats a gate position")
            occupied = [q for s in layer.sites for q in (s, s + 1)]
            if len(set(occupied)) != len(occupied) or max(occupied, default=0) >= self.n_qubits:
                raise ValueError(f"half-layer {h} has overlapping or out-of-range gates")

    @property
    def gates(self) -> List[Tuple[int, int]]:
        """(half-layer, left site) for every gate, in time order."""
        return [(h, s) for h, layer in enumerate(self.half_layers) for s in layer.sites]

    @property
    def n_gates(self) -> int:
        return sum(len(layer.sites) for layer in self.half_layers)

    @property
    def n_full_params(self) -> int:
        return PARAMS_PER_GATE * self.n_gates


def _rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def _rx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def euler_rotation(angles: Sequence[float]) -> np.ndarray:
    alpha, beta, gamma = angles
    return _rz(alpha) @ _rx(beta) @ _rz(gamma)


def euler_derivatives(angles: Sequence[float]) -> np.ndarray:
    alpha, beta, gamma = angles
    rz_a, rx_b, rz_g = _rz(alpha), _rx(beta), _rz(gamma)
    half_z, half_x = -0.5j * _Z, -0.5j * _X
    return np.stack([
        half_z @ rz_a @ rx_b @ rz_g,
        rz_a @ half_x @ rx_b @ rz_g,
        rz_a @ rx_b @ rz_g @ half_z,
    ])


def euler_angles(u: np.ndarray) -> np.ndarray:
    """ZXZ angles (alpha, beta, gamma) with R(alpha, beta, gamma) = u up to phase."""
    v = u / np.sqrt(np.linalg.det(u))
    beta = 2.0 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    plus = -2.0 * np.angle(v[0, 0]) if abs(v[0, 0]) > 1e-12 else 0.0
    minus = 2.0 * np.angle(v[1, 0]) + np.pi if abs(v[1, 0]) > 1e-12 else 0.0
    return np.array([(plus + minus) / 2.0, beta, (plus - minus) / 2.0])


def _core(a: float, b: float, c: float) -> np.ndarray:
    # XX, YY and ZZ commute, so the exponential factorizes
    return ((np.cos(a) * _I4 + 1j * np.sin(a) * _XX)
            @ (np.cos(b) * _I4 + 1j * np.sin(b) * _YY)
            @ (np.cos(c) * _I4 + 1j * np.sin(c) * _ZZ))


def _as_params(g: Union[CartanGate, Sequence[float]]) -> np.ndarray:
    params = np.asarray(g.params if isinstance(g, CartanGate) else g, dtype=np.float64)
    if params.shape != (PARAMS_PER_GATE,):
        raise DimensionError(f"a Cartan gate takes {PARAMS_PER_GATE} parameters, got {params.shape}")
    return params


def gate_unitary(g: Union[CartanGate, Sequence[float]]) -> np.ndarray:
    p = _as_params(g)
    pre = np.kron(euler_rotation(p[PRE_L]), euler_rotation(p[PRE_R]))
    post = np.kron(euler_rotation(p[POST_L]), euler_rotation(p[POST_R]))
    return post @ _core(*p[CORE]) @ pre


def gate_unitary_derivatives(g: Union[CartanGate, Sequence[float]]) -> np.ndarray:
    """(15, 4, 4) array of dU/dtheta_k."""
    p = _as_params(g)
    r_pre_l, r_pre_r = euler_rotation(p[PRE_L]), euler_rotation(p[PRE_R])
    r_post_l, r_post_r = euler_rotation(p[POST_L]), euler_rotation(p[POST_R])
    pre = np.kron(r_pre_l, r_pre_r)
    post = np.kron(r_post_l, r_post_r)
    core = _core(*p[CORE])
    out = np.empty((PARAMS_PER_GATE, 4, 4), dtype=np.complex128)
    head = post @ core
    for k, d in enumerate(euler_derivatives(p[PRE_L])):
        out[k] = head @ np.kron(d, r_pre_r)
    for k, d in enumerate(euler_derivatives(p[PRE_R])):
        out[3 + k] = head @ np.kron(r_pre_l, d)
    for k, gen in enumerate((_XX, _YY, _ZZ)):
        out[6 + k] = post @ (1j * gen) @ core @ pre
    tail = core @ pre
    for k, d in enumerate(euler_derivatives(p[POST_L])):
        out[9 + k] = np.kron(d, r_post_r) @ tail
    for k, d in enumerate(euler_derivatives(p[POST_R])):
        out[12 + k] = np.kron(r_post_l, d) @ tail
    return out


def makhlin_invariants(u: np.ndarray) -> Tuple[complex, float]:
    """Local-equivalence invariants (G1, G2) of a two-qubit unitary."""
    m = MAGIC.conj().T @ u @ MAGIC
    m = m.T @ m
    det = np.linalg.det(u)
    tr = np.trace(m)
    g1 = tr ** 2 / (16.0 * det)
    g2 = (tr ** 2 - np.trace(m @ m)) / (4.0 * det)
    return complex(g1), float(g2.real)


# --- construction -----------------------------------------------------------

def _pair_sites(n_qubits: int, alignment: str) -> List[int]:
    start = 0 if alignment == 'even' else 1
    return list(range(start, n_qubits - 1, 2))


def build_brickwork(n_qubits: int, layers: float, init_layer: Optional[PhaseLabel] = None) -> BrickworkCircuit:
    """L-layer brickwork ansatz on ``n_qubits``.

    2L half-layers alternate even- and odd-aligned, starting even-aligned
    next to |0...0>. For an even_haldane init layer the singlet preparation
    occupies half-layer 0; an integer L gets one extra half-layer for it.
    For odd_haldane the preparation sits in half-layer 1, the first
    odd-aligned one.
    """
    if n_qubits < 2 or n_qubits % 2:
        raise ValueError(f"brickwork circuits need an even qubit count >= 2, got {n_qubits}")
    n_half = 2.0 * layers
    if layers <= 0 or abs(n_half - round(n_half)) > 1e-9:
        raise ValueError(f"layer count must be a positive multiple of 1/2, got {layers}")
    n_half = int(round(n_half))
    init = PhaseLabel(init_layer) if init_layer is not None else None
    init_half = None
    if init == PhaseLabel.EVEN_HALDANE:
        if n_half % 2 == 0:
            n_half += 1
            logger.info(f"appending a singlet-preparation half-layer: {layers} -> {n_half / 2} layers")
        init_half = 0
    elif init == PhaseLabel.ODD_HALDANE:
        if n_half < 2:
            n_half = 2
            logger.info("odd-Haldane initialization needs an odd-aligned half-layer, using 1 full layer")
        init_half = 1
    elif init is not None:
        raise ValueError(f"no initialization layer for phase '{init.value}'")
    half_layers = []
    for h in range(n_half):
        alignment = 'even' if h % 2 == 0 else 'odd'
        half_layers.append(HalfLayer(alignment, _pair_sites(n_qubits, alignment)))
    return BrickworkCircuit(n_qubits, half_layers, n_half / 2.0, init, init_half)


# --- parameter layouts ------------------------------------------------------

def _first_touch(circuit: BrickworkCircuit) -> Dict[int, int]:
    """Qubit -> index of the first gate acting on it."""
    first: Dict[int, int] = {}
    for g, (_, site) in enumerate(circuit.gates):
        for q in (site, site + 1):
            first.setdefault(q, g)
    return first


def free_parameter_indices(circuit: BrickworkCircuit) -> np.ndarray:
    """Full-layout indices left free by the reduction pass.

    Every gate keeps its interaction and post-rotation angles; pre-rotations
    survive only on a gate's first touch of a qubit, and there only as
    (alpha, beta) because the leading Rz acts on |0>.
    """
    first = _first_touch(circuit)
    free = []
    for g, (_, site) in enumerate(circuit.gates):
        base = g * PARAMS_PER_GATE
        if first[site] == g:
            free.extend([base + 0, base + 1])
        if first[site + 1] == g:
            free.extend([base + 3, base + 4])
        free.extend(range(base + 6, base + 15))
    return np.array(free, dtype=np.int64)


def expand_parameters(circuit: BrickworkCircuit, reduced: Sequence[float]) -> np.ndarray:
    free = free_parameter_indices(circuit)
    reduced = np.asarray(reduced, dtype=np.float64)
    if reduced.shape != free.shape:
        raise DimensionError(f"expected {free.size} parameters, got {reduced.size}")
    full = np.zeros(circuit.n_full_params)
    full[free] = reduced
    return full


def reduce_parameters(circuit: BrickworkCircuit, full: Sequence[float]) -> np.ndarray:
    """Fold every non-initial pre-rotation into the preceding gate's post-rotation.

    The prepared state U|0...0> is unchanged up to a global phase.
    """
    full = np.array(full, dtype=np.float64)
    if full.shape != (circuit.n_full_params,):
        raise DimensionError(f"expected {circuit.n_full_params} parameters, got {full.size}")
    last: Dict[int, Tuple[int, int]] = {}  # qubit -> (gate, offset of its post triple)
    for g, (_, site) in enumerate(circuit.gates):
        base = g * PARAMS_PER_GATE
        for q, pre_off, post_off in ((site, 0, 9), (site + 1, 3, 12)):
            pre = full[base + pre_off: base + pre_off + 3]
            if q in last:
                prev_g, prev_off = last[q]
                at = prev_g * PARAMS_PER_GATE + prev_off
                merged = euler_rotation(pre) @ euler_rotation(full[at:at + 3])
                full[at:at + 3] = euler_angles(merged)
                full[base + pre_off: base + pre_off + 3] = 0.0
            else:
                full[base + pre_off + 2] = 0.0
            last[q] = (g, post_off)
    return full[free_parameter_indices(circuit)]


def initial_parameters(circuit: BrickworkCircuit, phase: PhaseLabel) -> np.ndarray:
    """Reduced-layout vector preparing the singlet product of ``phase``; other gates are identity."""
    phase = PhaseLabel(phase)
    if phase == PhaseLabel.EVEN_HALDANE:
        h, wanted = 0, range(0, circuit.n_qubits - 1, 2)
    elif phase == PhaseLabel.ODD_HALDANE:
        h, wanted = 1, range(1, circuit.n_qubits - 2, 2)
    else:
        raise ValueError(f"no singlet initialization for phase '{phase.value}'")
    if h >= len(circuit.half_layers):
        raise ValueError(f"circuit has no half-layer {h} to hold the singlet preparation")
    full = np.zeros(circuit.n_full_params)
    for g, (layer, site) in enumerate(circuit.gates):
        if layer == h and site in wanted:
            full[g * PARAMS_PER_GATE:(g + 1) * PARAMS_PER_GATE] = SINGLET_GATE_PARAMS
    return full[free_parameter_indices(circuit)]


def parameter_count(circuit: BrickworkCircuit) -> int:
    return int(free_parameter_indices(circuit).size)


def metrics(circuit: BrickworkCircuit) -> CircuitMetrics:
    occupied = sum(1 for layer in circuit.half_layers if layer.sites)
    return CircuitMetrics(
        cnot_depth=CNOTS_PER_GATE * occupied,
        cnot_count=CNOTS_PER_GATE * circuit.n_gates,
        parameter_count=parameter_count(circuit),
    )


# --- simulation -------------------------------------------------------------

def gate_sequence(circuit: BrickworkCircuit, full: Sequence[float]) -> List[Tuple[int, np.ndarray]]:
    full = np.asarray(full, dtype=np.float64)
    if full.shape != (circuit.n_full_params,):
        raise DimensionError(f"expected {circuit.n_full_params} parameters, got {full.size}")
    return [
        (site, gate_unitary(full[g * PARAMS_PER_GATE:(g + 1) * PARAMS_PER_GATE]))
        for g, (_, site) in enumerate(circuit.gates)
    ]


def simulate(
    circuit: BrickworkCircuit,
    full: Sequence[float],
    policy: Optional[TruncationPolicy] = None,
    initial: Optional[MPSState] = None,
) -> MPSState:
    """U(theta) applied to |0...0> (or ``initial``) as an MPS."""
    state = initial or product_state([0] * circuit.n_qubits)
    for site, unitary in gate_sequence(circuit, full):
        state = apply_two_qubit_gate(state, unitary, site, policy)
    return state


def dense_state(circuit: BrickworkCircuit, full: Sequence[float]) -> np.ndarray:
    return statevector.run_gates(gate_sequence(circuit, full), circuit.n_qubits)


# --- serialization ----------------------------------------------------------

def circuit_to_dict(circuit: BrickworkCircuit, full: Sequence[float]) -> dict:
    full = np.asarray(full, dtype=np.float64)
    layers = []
    g = 0
    for layer in circuit.half_layers:
        gates = []
        for site in layer.sites:
            gates.append({'left_site': site, 'params': [float(x) for x in full[g * 15:(g + 1) * 15]]})
            g += 1
        layers.append({'alignment': layer.alignment, 'gates': gates})
    return {
        'version': CIRCUIT_FORMAT_VERSION,
        'n_qubits': circuit.n_qubits,
        'total_layers': circuit.total_layers,
        'init_layer': circuit.init_layer.value if circuit.init_layer else None,
        'layers': layers,
    }


def circuit_from_dict(data: dict) -> Tuple[BrickworkCircuit, np.ndarray]:
    init = data.get('init_layer')
    init = PhaseLabel(init) if init else None
    half_layers = [HalfLayer(layer['alignment'], [g['left_site'] for g in layer['gates']]) for layer in data['layers']]
    params = [p for layer in data['layers'] for g in layer['gates'] for p in g['params']]
    init_half = {PhaseLabel.EVEN_HALDANE: 0, PhaseLabel.ODD_HALDANE: 1}.get(init) if init else None
    total = data.get('total_layers', len(half_layers) / 2.0)
    circuit = BrickworkCircuit(int(data['n_qubits']), half_layers, float(total), init, init_half)
    return circuit, np.asarray(params, dtype=np.float64)


# --- OpenQASM 3 -------------------------------------------------------------

def _angle(x: float) -> str:
    return f"{float(x):.17g}"


def _lower_gate(lines: List[str], params: np.ndarray, i: int) -> None:
    """Euler pre-rotations, the 3-CNOT interaction template, Euler post-rotations."""
    j = i + 1
    a, b, c = params[CORE]
    for q, (alpha, beta, gamma) in ((i, params[PRE_L]), (j, params[PRE_R])):
        lines.append(f"rz({_angle(gamma)}) q[{q}];")
        lines.append(f"rx({_angle(beta)}) q[{q}];")
        lines.append(f"rz({_angle(alpha)}) q[{q}];")
    lines.append(f"rz({_angle(np.pi / 2)}) q[{i}];")
    lines.append(f"cx q[{j}], q[{i}];")
    lines.append(f"rz({_angle(np.pi / 2 - 2 * c)}) q[{i}];")
    lines.append(f"ry({_angle(2 * b - np.pi / 2)}) q[{j}];")
    lines.append(f"cx q[{i}], q[{j}];")
    lines.append(f"ry({_angle(np.pi / 2 - 2 * a)}) q[{j}];")
    lines.append(f"cx q[{j}], q[{i}];")
    lines.append(f"rz({_angle(-np.pi / 2)}) q[{j}];")
    for q, (alpha, beta, gamma) in ((i, params[POST_L]), (j, params[POST_R])):
        lines.append(f"rz({_angle(gamma)}) q[{q}];")
        lines.append(f"rx({_angle(beta)}) q[{q}];")
        lines.append(f"rz({_angle(alpha)}) q[{q}];")


def export_qasm(circuit: BrickworkCircuit, full: Sequence[float]) -> str:
    full = np.asarray(full, dtype=np.float64)
    if full.shape != (circuit.n_full_params,):
        raise DimensionError(f"expected {circuit.n_full_params} parameters, got {full.size}")
    lines = ['OPENQASM 3.0;', 'include "stdgates.inc";', f"qubit[{circuit.n_qubits}] q;"]
    for g, (h, site) in enumerate(circuit.gates):
        lines.append(f"// gate {g}: half-layer {h}, qubits {site},{site + 1}")
        _lower_gate(lines, full[g * PARAMS_PER_GATE:(g + 1) * PARAMS_PER_GATE], site)
    return '\n'.join(lines) + '\n'


_QUBITS_RE = re.compile(r'qubit\[(\d+)\]\s+\w+;')
_ROT_RE = re.compile(r'^(rz|rx|ry)\(([^)]+)\)\s+q\[(\d+)\];$')
_CX_RE = re.compile(r'^cx\s+q\[(\d+)\],\s*q\[(\d+)\];$')


def import_qasm(text: str) -> Tuple[int, List[Tuple[str, Tuple[int, ...], Optional[float]]]]:
    """Parse the subset emitted by ``export_qasm`` into (n_qubits, instructions)."""
    n_qubits = None
    program = []
    for raw in text.splitlines():
        line = raw.split('//', 1)[0].strip()
        if not line or line.startswith(('OPENQASM', 'include')):
            continue
        m = _QUBITS_RE.match(line)
        if m:
            n_qubits = int(m.group(1))
            continue
        m = _ROT_RE.match(line)
        if m:
            program.append((m.group(1), (int(m.group(3)),), float(m.group(2))))
            continue
        m = _CX_RE.match(line)
        if m:
            program.append(('cx', (int(m.group(1)), int(m.group(2))), None))
            continue
        raise ValueError(f"unsupported QASM statement: {line!r}")
    if n_qubits is None:
        raise ValueError("QASM program declares no qubit register")
    return n_qubits, program


def qasm_statevector(text: str) -> np.ndarray:
    n_qubits, program = import_qasm(text)
    rotations = {'rz': _rz, 'rx': _rx, 'ry': _ry}
    vec = statevector.zero_state(n_qubits)
    for name, qubits, angle in program:
        if name == 'cx':
            vec = statevector.apply_controlled_x(vec, qubits[0], qubits[1], n_qubits)
        else:
            vec = statevector.apply_single(vec, rotations[name](angle), qubits[0], n_qubits)
    return vec
