# core/aqc.py
"""
Approximate quantum compiling of an MPS target into a brickwork circuit.

The cost is C = 1 - |<target|U(theta)|0...0>|^2. Gradients come from
environment contractions: a forward pass stores the state before every
half-layer, a backward pass pulls the target through the adjoint layers,
and each gate's derivative is the bra/ket network of its half-layer with
that gate cut out, chained through ``gate_unitary_derivatives``.

When the simulation policy's bond limit binds, the truncations are part of
the cost function. The backward pass then runs gate by gate and carries
the cotangent state through the derivative of each rank-k Schmidt
projection, renormalization included.

Parameters handed to this module are in the reduced layout of
``core.circuit``.
"""

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.circuit import (
    PARAMS_PER_GATE,
    BrickworkCircuit,
    expand_parameters,
    free_parameter_indices,
    gate_unitary,
    gate_unitary_derivatives,
    metrics,
    simulate,
)
from core.exceptions import ConfigError, DimensionError, OptimizationDivergedError
from core.lattice import MPO
from core.linalg import TruncationPolicy, svd
from core.mps import (
    MPSState,
    add_states,
    apply_two_qubit_gate,
    center_within,
    fidelity,
    mpo_expectation,
    normalize,
    overlap,
    product_state,
    truncate,
)
from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_ALARM_THRESHOLD = 1e-6


class Termination(str, Enum):
    TARGET_REACHED = 'target_reached'
    MAX_ITERATIONS = 'max_iterations'
    WALL_CLOCK = 'wall_clock'


@dataclass
class AdamSettings:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            logger.warning(f"Invalid learning_rate {self.learning_rate}, using 0.01")
            self.learning_rate = 0.01
        for name in ('beta1', 'beta2'):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"aqc.adam.{name}", f"must lie in [0, 1), got {getattr(self, name)}")
        if self.epsilon <= 0:
            raise ConfigError('aqc.adam.epsilon', f"must be positive, got {self.epsilon}")

    def to_dict(self) -> Dict[str, float]:
        return {'learning_rate': self.learning_rate, 'beta1': self.beta1, 'beta2': self.beta2, 'epsilon': self.epsilon}


@dataclass
class AqcConfig:
    target_fidelity: float = 0.99
    max_iterations: int = 2000
    adam: AdamSettings = field(default_factory=AdamSettings)
    # None: chi_max = 2x the target's bond dimension with squared cut 1e-12
    simulation_policy: Optional[TruncationPolicy] = None
    seed: int = 0
    wall_clock_limit: Optional[float] = None
    alarm_threshold: float = DEFAULT_ALARM_THRESHOLD
    init_noise: float = 0.0
    log_every: int = 50

    def __post_init__(self) -> None:
        if isinstance(self.adam, dict):
            self.adam = AdamSettings(**self.adam)
        if isinstance(self.simulation_policy, dict):
            self.simulation_policy = TruncationPolicy.from_dict(self.simulation_policy)
        if not 0.0 < self.target_fidelity <= 1.0:
            raise ConfigError('aqc.target_fidelity', f"must lie in (0, 1], got {self.target_fidelity}")
        if self.max_iterations < 0:
            logger.warning(f"Invalid max_iterations {self.max_iterations}, using 2000")
            self.max_iterations = 2000
        if self.wall_clock_limit is not None and self.wall_clock_limit <= 0:
            logger.warning(f"Invalid wall_clock_limit {self.wall_clock_limit}, disabling it")
            self.wall_clock_limit = None
        if self.alarm_threshold < 0:
            raise ConfigError('aqc.alarm_threshold', f"must be non-negative, got {self.alarm_threshold}")
        if self.init_noise < 0:
            raise ConfigError('aqc.init_noise', f"must be non-negative, got {self.init_noise}")
        if self.log_every < 1:
            self.log_every = 50

    def policy_for(self, target: MPSState) -> TruncationPolicy:
        if self.simulation_policy is not None:
            return self.simulation_policy
        return TruncationPolicy(chi_max=2 * target.max_bond_dimension(), svd_min=0.0, trunc_cut=1e-12)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'target_fidelity': self.target_fidelity,
            'max_iterations': self.max_iterations,
            'adam': self.adam.to_dict(),
            'simulation_policy': self.simulation_policy.to_dict() if self.simulation_policy else None,
            'seed': self.seed,
            'wall_clock_limit': self.wall_clock_limit,
            'alarm_threshold': self.alarm_threshold,
            'init_noise': self.init_noise,
            'log_every': self.log_every,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AqcConfig':
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"aqc.{sorted(unknown)[0]}", "unknown key")
        return cls(**data)


class CostEvaluation(NamedTuple):
    cost: float
    gradient: np.ndarray
    discarded_weight: float


@dataclass
class AqcResult:
    params: np.ndarray
    fidelity_vs_compressed: float
    fidelity_vs_uncompressed: float
    cost_history: List[float]
    iterations: int
    terminated_by: Termination
    initial_fidelity: float
    compiled_energy: Optional[float] = None
    metrics: Dict[str, int] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'fidelities': {
                'initial': self.initial_fidelity,
                'compressed': self.fidelity_vs_compressed,
                'uncompressed': self.fidelity_vs_uncompressed,
            },
            'compiled_energy': self.compiled_energy,
            'iterations': self.iterations,
            'terminated_by': self.terminated_by.value,
            'metrics': dict(self.metrics),
            'cost_history': [float(c) for c in self.cost_history],
            'warnings': list(self.warnings),
        }


class Adam:
    """Adam with bias-corrected moments; one instance per optimization run."""

    name = 'adam'

    def __init__(self, learning_rate: float = 0.01, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.iteration_count = 0
        self.gradient_moment: Optional[np.ndarray] = None
        self.gradient_square_moment: Optional[np.ndarray] = None

    @classmethod
    def from_settings(cls, settings: AdamSettings) -> 'Adam':
        return cls(settings.learning_rate, settings.beta1, settings.beta2, settings.epsilon)

    def __str__(self) -> str:
        return f"{self.name}, beta1: {self.beta1}, beta2: {self.beta2}, epsilon: {self.epsilon}, lr: {self.learning_rate}"

    def initialize(self, shape: Tuple[int, ...]) -> None:
        self.iteration_count = 0
        self.gradient_moment = np.zeros(shape)
        self.gradient_square_moment = np.zeros(shape)

    def update(self, grads: np.ndarray, params: np.ndarray) -> np.ndarray:
        if self.gradient_moment is None:
            self.initialize(params.shape)
        self.iteration_count += 1
        self.gradient_moment = self.beta1 * self.gradient_moment + (1 - self.beta1) * grads
        self.gradient_square_moment = self.beta2 * self.gradient_square_moment + (1 - self.beta2) * np.square(grads)
        m_hat = self.gradient_moment / (1 - self.beta1 ** self.iteration_count)
        v_hat = self.gradient_square_moment / (1 - self.beta2 ** self.iteration_count)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


# --- cost and gradient ------------------------------------------------------

def _check_inputs(circuit: BrickworkCircuit, params: np.ndarray, target: MPSState) -> np.ndarray:
    if target.n_sites != circuit.n_qubits:
        raise DimensionError(f"target has {target.n_sites} sites, circuit acts on {circuit.n_qubits} qubits")
    return expand_parameters(circuit, np.asarray(params, dtype=np.float64))


def _layer_gates(circuit: BrickworkCircuit, full: np.ndarray) -> List[List[Tuple[int, int, np.ndarray]]]:
    layers: List[List[Tuple[int, int, np.ndarray]]] = [[] for _ in circuit.half_layers]
    for g, (h, site) in enumerate(circuit.gates):
        layers[h].append((g, site, gate_unitary(full[g * PARAMS_PER_GATE:(g + 1) * PARAMS_PER_GATE])))
    return layers


def _apply_layer(state: MPSState, gates, policy: TruncationPolicy, adjoint: bool = False) -> MPSState:
    for _, site, unitary in gates:
        state = apply_two_qubit_gate(state, unitary.conj().T if adjoint else unitary, site, policy)
    return state


def _layer_environments(bra: MPSState, ket: MPSState, gates) -> Dict[int, np.ndarray]:
    """d<bra|layer|ket>/dU_g as (2, 2, 2, 2) arrays indexed [out_i, out_j, in_i, in_j]."""
    n = ket.n_sites
    by_site = {site: (g, unitary.reshape(2, 2, 2, 2)) for g, site, unitary in gates}
    blocks = []
    i = 0
    while i < n:
        if i in by_site:
            blocks.append((i, by_site[i]))
            i += 2
        else:
            blocks.append((i, None))
            i += 1
    b = [t.conj() for t in bra.tensors]
    k = ket.tensors

    left = [np.ones((1, 1), dtype=np.complex128)]
    for start, gate in blocks:
        env = left[-1]
        if gate is None:
            env = np.einsum('ab,asc,bsd->cd', env, b[start], k[start])
        else:
            env = np.einsum('ab,asc,cte,stuv,bud,dvf->ef', env, b[start], b[start + 1], gate[1],
                            k[start], k[start + 1], optimize=True)
        left.append(env)
    right = [np.ones((1, 1), dtype=np.complex128)]
    for start, gate in reversed(blocks):
        env = right[-1]
        if gate is None:
            env = np.einsum('asc,bsd,cd->ab', b[start], k[start], env)
        else:
            env = np.einsum('asc,cte,stuv,bud,dvf,ef->ab', b[start], b[start + 1], gate[1],
                            k[start], k[start + 1], env, optimize=True)
        right.append(env)
    right.reverse()

    out = {}
    for idx, (start, gate) in enumerate(blocks):
        if gate is None:
            continue
        out[gate[0]] = np.einsum('ab,asc,cte,bud,dvf,ef->stuv', left[idx], b[start], b[start + 1],
                                 k[start], k[start + 1], right[idx + 1], optimize=True)
    return out


def _warn_on_truncation(discarded: float, threshold: float) -> Optional[str]:
    if discarded > threshold:
        message = f"ansatz simulation discarded weight {discarded:.3e} above alarm threshold {threshold:.1e}"
        logger.warning(message)
        return message
    return None


def cost(
    circuit: BrickworkCircuit,
    params: Sequence[float],
    target: MPSState,
    policy: Optional[TruncationPolicy] = None,
    alarm_threshold: float = DEFAULT_ALARM_THRESHOLD,
) -> float:
    full = _check_inputs(circuit, np.asarray(params), target)
    state = simulate(circuit, full, policy or TruncationPolicy.unlimited())
    _warn_on_truncation(state.truncation_error, alarm_threshold)
    value = 1.0 - abs(overlap(normalize(target), state)) ** 2
    return float(value)


class _GateStep(NamedTuple):
    index: int
    site: int
    unitary: np.ndarray
    before: MPSState  # centre on site or site + 1


def _forward(layers, n_qubits: int, policy: TruncationPolicy) -> Tuple[List[MPSState], List[_GateStep]]:
    """States before every half-layer (plus the final one) and the state before every gate."""
    forward = [product_state([0] * n_qubits)]
    steps: List[_GateStep] = []
    for gates in layers:
        state = forward[-1]
        for g, site, unitary in gates:
            state = center_within(state, site, site + 1)
            steps.append(_GateStep(g, site, unitary, state))
            state = apply_two_qubit_gate(state, unitary, site, policy)
        forward.append(state)
    return forward, steps


def _kept_rank(step: _GateStep, policy: TruncationPolicy) -> Optional[int]:
    """Schmidt rank the bond limit allows at this gate's cut, or None when the limit cannot bind.

    Values dropped only by ``svd_min`` or ``trunc_cut`` sit at the numerical
    floor; a parameter shift lifts them back above it, so they count as kept.
    """
    chi_l = step.before.tensors[step.site].shape[0]
    chi_r = step.before.tensors[step.site + 1].shape[2]
    full_rank = 2 * min(chi_l, chi_r)
    return policy.chi_max if policy.chi_max < full_rank else None


def _layer_gradient(layers, forward: List[MPSState], full: np.ndarray, bra: MPSState, amplitude: complex) -> np.ndarray:
    grad_full = np.zeros_like(full)
    for h in range(len(layers) - 1, -1, -1):
        gates = layers[h]
        if gates:
            envs = _layer_environments(bra, forward[h], gates)
            for g, _, _ in gates:
                block = slice(g * PARAMS_PER_GATE, (g + 1) * PARAMS_PER_GATE)
                derivs = gate_unitary_derivatives(full[block]).reshape(PARAMS_PER_GATE, 2, 2, 2, 2)
                d_amp = np.einsum('stuv,pstuv->p', envs[g], derivs)
                grad_full[block] = -2.0 * np.real(np.conj(amplitude) * d_amp)
        if h > 0:
            bra = _apply_layer(bra, gates, TruncationPolicy.unlimited(), adjoint=True)
    return grad_full


def _two_site_view(cotangent: MPSState, ket: MPSState, i: int) -> Tuple[np.ndarray, np.ndarray]:
    """``cotangent`` with the canonical environments of ``ket`` contracted around sites (i, i + 1).

    Returns the left half as (chi_l, 2, k) and the right half as (k, 2, chi_r),
    k being the cotangent's bond between the two sites.
    """
    left = np.ones((1, 1), dtype=np.complex128)
    for j in range(i):
        left = np.einsum('ab,asc,bsd->cd', left, ket.tensors[j].conj(), cotangent.tensors[j])
    right = np.ones((1, 1), dtype=np.complex128)
    for j in range(ket.n_sites - 1, i + 1, -1):
        right = np.einsum('asc,bsd,cd->ab', ket.tensors[j].conj(), cotangent.tensors[j], right)
    return (np.einsum('ab,bsc->asc', left, cotangent.tensors[i]),
            np.einsum('btc,ec->bte', cotangent.tensors[i + 1], right))


def _truncation_pullback(
    cotangent: MPSState, step: _GateStep, keep: int
) -> Tuple[MPSState, np.ndarray]:
    """Pull a cotangent back through one truncated, renormalized two-site update.

    The update maps the post-gate state psi to T(psi) |psi| / |T(psi)|, T
    keeping the ``keep`` largest Schmidt values across the gate's cut. Returns
    the cotangent of psi as an MPS and its two-site block on the canonical
    environments of ``step.before``.
    """
    i, ket = step.site, step.before
    theta = np.einsum('asb,btc->astc', ket.tensors[i], ket.tensors[i + 1])
    theta = np.einsum('xyst,astc->axyc', step.unitary.reshape(2, 2, 2, 2), theta)
    chi_l, chi_r = theta.shape[0], theta.shape[3]
    rows, cols = 2 * chi_l, 2 * chi_r
    psi = theta.reshape(rows, cols)

    lam_left, lam_right = _two_site_view(cotangent, ket, i)
    lam = np.einsum('asb,btc->astc', lam_left, lam_right).reshape(rows, cols)

    x, s, vh = svd(psi)
    k = keep
    x_k, s_k, vh_k = x[:, :k], s[:k], vh[:k, :]
    n_full = float(np.linalg.norm(s))
    n_kept = float(np.linalg.norm(s_k))
    kept = (x_k * s_k[np.newaxis, :]) @ vh_k

    # Derivative of the rank-k projection in the Schmidt basis: kept rows and
    # columns pass through, discarded pairs couple with 1 / (s_a^2 - s_b^2).
    b = x.conj().T @ lam @ vh.conj().T
    sa = s[:k, np.newaxis]
    sb = s[np.newaxis, k:]
    gap = sa ** 2 - sb ** 2
    valid = gap > 1e-14 * s[0] ** 2
    inv = np.where(valid, 1.0 / np.where(valid, gap, 1.0), 0.0)
    coupling = np.zeros_like(b)
    coupling[:k, k:] = (sb ** 2 * b[:k, k:] + sa * sb * b[k:, :k].T.conj()) * inv
    coupling[k:, :k] = (sb.T ** 2 * b[k:, :k] + (sa * sb).T * b[:k, k:].T.conj()) * inv.T
    coupling[:k, :k] -= b[:k, :k]

    ratio = n_full / n_kept
    beta = float(np.real(np.vdot(lam, kept)))
    local = ratio * (x @ coupling @ vh) - beta * n_full / n_kept ** 3 * kept + beta / (n_full * n_kept) * psi
    projected = ratio * (x_k @ (x_k.conj().T @ lam) + (lam @ vh_k.conj().T) @ vh_k) + local

    # Full cotangent: P_k(lam) + (lam)Q_k on the whole chain plus the local block.
    w = x_k.conj().T @ lam_left.reshape(rows, -1)
    left_term = MPSState(
        list(ket.tensors[:i])
        + [x_k.reshape(chi_l, 2, k), np.einsum('kb,btc->ktc', w, cotangent.tensors[i + 1])]
        + list(cotangent.tensors[i + 2:])
    )
    z = lam_right.reshape(-1, cols) @ vh_k.conj().T
    right_term = MPSState(
        list(cotangent.tensors[:i])
        + [np.einsum('asb,bk->ask', cotangent.tensors[i], z), vh_k.reshape(k, 2, chi_r)]
        + list(ket.tensors[i + 2:])
    )
    local_term = MPSState(
        list(ket.tensors[:i])
        + [local.reshape(chi_l, 2, cols), np.eye(cols, dtype=np.complex128).reshape(cols, 2, chi_r)]
        + list(ket.tensors[i + 2:])
    )
    pulled = add_states([(ratio, left_term), (ratio, right_term), (1.0, local_term)])
    return truncate(pulled, TruncationPolicy.unlimited()), projected.reshape(chi_l, 2, 2, chi_r)


def _gate_gradient(
    steps: List[_GateStep], full: np.ndarray, bra: MPSState, amplitude: complex, policy: TruncationPolicy
) -> np.ndarray:
    """Reverse sweep gate by gate, differentiating every truncation the bond limit imposed.

    The cotangent of the final state is -2 <t|psi> |t>; it is pulled back
    through each truncation exactly and through each gate without truncation.
    """
    grad_full = np.zeros_like(full)
    site = bra.ortho_center if bra.ortho_center is not None else 0
    tensors = list(bra.tensors)
    tensors[site] = -2.0 * amplitude * tensors[site]
    cotangent = MPSState(tensors, bra.ortho_center)
    for step in reversed(steps):
        keep = _kept_rank(step, policy)
        if keep is None:
            lam_left, lam_right = _two_site_view(cotangent, step.before, step.site)
            local = np.einsum('asb,btc->astc', lam_left, lam_right)
        else:
            cotangent, local = _truncation_pullback(cotangent, step, keep)
        i = step.site
        theta = np.einsum('asb,btc->astc', step.before.tensors[i], step.before.tensors[i + 1])
        block = slice(step.index * PARAMS_PER_GATE, (step.index + 1) * PARAMS_PER_GATE)
        derivs = gate_unitary_derivatives(full[block]).reshape(PARAMS_PER_GATE, 2, 2, 2, 2)
        grad_full[block] = np.real(np.einsum('axyc,pxyst,astc->p', local.conj(), derivs, theta, optimize=True))
        cotangent = apply_two_qubit_gate(cotangent, step.unitary.conj().T, i, TruncationPolicy.unlimited())
    return grad_full


def value_and_gradient(
    circuit: BrickworkCircuit,
    params: Sequence[float],
    target: MPSState,
    policy: Optional[TruncationPolicy] = None,
) -> CostEvaluation:
    """Cost and its gradient in the reduced layout from one forward and one backward sweep.

    The gradient is that of the truncated forward pass. When the bond limit
    never binds the backward sweep runs half-layer by half-layer; otherwise it
    runs gate by gate through the derivative of each truncation.
    """
    policy = policy or TruncationPolicy.unlimited()
    full = _check_inputs(circuit, np.asarray(params), target)
    layers = _layer_gates(circuit, full)

    forward, steps = _forward(layers, circuit.n_qubits, policy)
    bra = normalize(target)
    amplitude = overlap(bra, forward[-1])
    if any(_kept_rank(step, policy) is not None for step in steps):
        grad_full = _gate_gradient(steps, full, bra, amplitude, policy)
    else:
        grad_full = _layer_gradient(layers, forward, full, bra, amplitude)
    value = 1.0 - abs(amplitude) ** 2
    return CostEvaluation(float(value), grad_full[free_parameter_indices(circuit)], float(forward[-1].truncation_error))


def finite_difference_gradient(
    circuit: BrickworkCircuit,
    params: Sequence[float],
    target: MPSState,
    policy: Optional[TruncationPolicy] = None,
    step: float = 1e-5,
) -> np.ndarray:
    """Central differences of ``cost``; a reference for checking ``value_and_gradient``."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.zeros_like(params)
    for k in range(params.size):
        shift = np.zeros_like(params)
        shift[k] = step
        grad[k] = (cost(circuit, params + shift, target, policy, math.inf)
                   - cost(circuit, params - shift, target, policy, math.inf)) / (2.0 * step)
    return grad


# --- optimization -----------------------------------------------------------

def _jitter(circuit: BrickworkCircuit, params: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian noise on every reduced parameter outside the singlet-preparation half-layer."""
    gate_of = free_parameter_indices(circuit) // PARAMS_PER_GATE
    layer_of = np.array([h for h, _ in circuit.gates])[gate_of]
    mask = layer_of != (circuit.init_half_layer if circuit.init_half_layer is not None else -1)
    noise = rng.normal(0.0, scale, size=params.shape)
    return params + np.where(mask, noise, 0.0)


def optimize(
    circuit: BrickworkCircuit,
    theta0: Sequence[float],
    target: MPSState,
    cfg: Optional[AqcConfig] = None,
    uncompressed: Optional[MPSState] = None,
    hamiltonian: Optional[MPO] = None,
) -> AqcResult:
    """Adam descent on the cost until the target fidelity, the iteration cap or the wall clock.

    The returned parameters are the best seen. Fidelities are reported against
    ``target`` and against ``uncompressed`` (``target`` itself when absent);
    ``hamiltonian`` adds the compiled-state energy.
    """
    cfg = cfg or AqcConfig()
    theta0 = np.asarray(theta0, dtype=np.float64)
    expected = free_parameter_indices(circuit).size
    if theta0.shape != (expected,):
        raise DimensionError(f"expected {expected} parameters, got {theta0.size}")
    policy = cfg.policy_for(target)
    rng = np.random.default_rng(cfg.seed)
    params = _jitter(circuit, theta0, cfg.init_noise, rng) if cfg.init_noise > 0 else theta0.copy()

    adam = Adam.from_settings(cfg.adam)
    adam.initialize(params.shape)
    logger.info(f"AQC start: {circuit.n_qubits} qubits, {circuit.total_layers} layers, "
                f"{params.size} parameters, {adam}, policy chi_max={policy.chi_max}")

    started = time.monotonic()
    history: List[float] = []
    warnings: List[str] = []
    best_cost, best_params = math.inf, params.copy()
    terminated_by = Termination.MAX_ITERATIONS
    iterations = 0
    while True:
        evaluation = value_and_gradient(circuit, params, target, policy)
        if not np.isfinite(evaluation.cost) or not np.all(np.isfinite(evaluation.gradient)):
            logger.error(f"AQC diverged at iteration {iterations}: cost {evaluation.cost}")
            raise OptimizationDivergedError(f"cost became {evaluation.cost} at iteration {iterations}",
                                            params.copy(), iterations)
        history.append(evaluation.cost)
        message = _warn_on_truncation(evaluation.discarded_weight, cfg.alarm_threshold)
        if message and message not in warnings:
            warnings.append(message)
        if evaluation.cost < best_cost:
            best_cost, best_params = evaluation.cost, params.copy()
        if iterations % cfg.log_every == 0:
            logger.info(f"AQC iteration {iterations}: cost {evaluation.cost:.6e}, best fidelity {1 - best_cost:.6f}")
        if 1.0 - evaluation.cost >= cfg.target_fidelity:
            terminated_by = Termination.TARGET_REACHED
            break
        if iterations >= cfg.max_iterations:
            break
        if cfg.wall_clock_limit is not None and time.monotonic() - started > cfg.wall_clock_limit:
            terminated_by = Termination.WALL_CLOCK
            break
        params = adam.update(evaluation.gradient, params)
        iterations += 1

    final_full = expand_parameters(circuit, best_params)
    compiled = simulate(circuit, final_full, policy)
    reference = uncompressed if uncompressed is not None else target
    result = AqcResult(
        params=best_params,
        fidelity_vs_compressed=fidelity(target, compiled),
        fidelity_vs_uncompressed=fidelity(reference, compiled),
        cost_history=history,
        iterations=iterations,
        terminated_by=terminated_by,
        initial_fidelity=1.0 - history[0],
        compiled_energy=mpo_expectation(compiled, hamiltonian) if hamiltonian is not None else None,
        metrics=metrics(circuit).to_dict(),
        warnings=warnings,
        wall_time=time.monotonic() - started,
    )
    logger.info(f"AQC finished ({terminated_by.value}) after {iterations} iterations: "
                f"fidelity {result.fidelity_vs_compressed:.6f} compressed, "
                f"{result.fidelity_vs_uncompressed:.6f} uncompressed")
    return result
