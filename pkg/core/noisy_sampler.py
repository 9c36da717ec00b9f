# core/noisy_sampler.py
"""
Shot-based expectation values under synthetic device noise, with the
mitigation stack applied on top: Pauli twirling, TREX readout correction,
probability-scaled noise amplification and zero-noise extrapolation.

Noise acts through Monte-Carlo trajectories on the MPS back-end. After each
two-qubit gate a coherent ZZ over-rotation (the twirling fixture) may act,
then with probability amplification * p2q a uniformly drawn non-identity
two-qubit Pauli. Every twirl instance draws one noise trajectory and
shots / twirls measurement shots from it; per-twirl substreams come from
``SeedSequence.spawn`` so results do not depend on evaluation order.

Circuit parameters handed to this module are in the full layout of
``core.circuit``.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from core.circuit import BrickworkCircuit, gate_sequence
from core.exceptions import CalibrationError, ConfigError, FitError
from core.linalg import TruncationPolicy
from core.mps import (
    PAULI,
    MPSState,
    PauliString,
    apply_single_qubit_gate,
    apply_two_qubit_gate,
    expect_pauli,
    product_state,
    sample_bitstrings,
)
from core.statevector import zz_rotation
from utils.logger import get_logger

logger = get_logger(__name__)

RankWarning = getattr(np, 'RankWarning', None) or np.exceptions.RankWarning

DEFAULT_NOISE_FACTORS = (1.0, 1.05, 1.1, 1.15, 1.2, 1.4, 1.6, 1.8, 2.0)
ZNE_MODELS = ('linear', 'quadratic', 'exponential')
DEFAULT_SHOTS = 10000
DEFAULT_TWIRLS = 100
DEFAULT_FLAG_THRESHOLD = 0.05
MIN_CALIBRATION_FACTOR = 1e-12

_PAULI_PAIRS = [(a, b) for a, b in itertools.product('IXYZ', repeat=2) if (a, b) != ('I', 'I')]
_BASIS_CHANGE = {
    'X': np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    'Y': np.array([[1, -1j], [1, 1j]], dtype=np.complex128) / np.sqrt(2),
}

SeedLike = Union[int, np.random.SeedSequence]


def _as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


@dataclass
class NoiseModel:
    p2q: float = 0.0
    # per-qubit (p(1|0), p(0|1)); a single pair applies to every qubit
    readout: Union[Tuple[float, float], List[Tuple[float, float]]] = (0.0, 0.0)
    amplification: float = 1.0
    coherent_zz: float = 0.0
    twirling: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.p2q <= 1.0:
            raise ConfigError('noise.p2q', f"must lie in [0, 1], got {self.p2q}")
        if self.amplification < 1.0:
            raise ConfigError('noise.amplification', f"must be >= 1, got {self.amplification}")
        if self.amplification * self.p2q > 1.0:
            raise ValueError(f"amplified error probability {self.amplification * self.p2q} exceeds 1")
        pairs = [self.readout] if self._uniform else list(self.readout)
        for p01, p10 in pairs:
            if not (0.0 <= p01 <= 1.0 and 0.0 <= p10 <= 1.0):
                raise ConfigError('noise.readout', f"flip probabilities must lie in [0, 1], got ({p01}, {p10})")

    @property
    def _uniform(self) -> bool:
        return len(self.readout) == 2 and not isinstance(self.readout[0], (tuple, list))

    @property
    def gate_error(self) -> float:
        return self.amplification * self.p2q

    @property
    def coherent_angle(self) -> float:
        return self.amplification * self.coherent_zz

    def readout_for(self, qubit: int) -> Tuple[float, float]:
        if self._uniform:
            return tuple(self.readout)
        return tuple(self.readout[qubit])

    def amplified(self, factor: float) -> 'NoiseModel':
        return NoiseModel(self.p2q, self.readout, factor, self.coherent_zz, self.twirling)

    def with_readout(self, qubit: int, pair: Tuple[float, float], n_qubits: int) -> 'NoiseModel':
        table = [self.readout_for(q) for q in range(n_qubits)]
        table[qubit] = tuple(pair)
        return NoiseModel(self.p2q, table, self.amplification, self.coherent_zz, self.twirling)

    def to_dict(self) -> dict:
        if self._uniform:
            readout = {'p01': self.readout[0], 'p10': self.readout[1]}
        else:
            readout = {'p01': [p[0] for p in self.readout], 'p10': [p[1] for p in self.readout]}
        return {'p2q': self.p2q, 'readout': readout, 'amplification': self.amplification,
                'coherent_zz': self.coherent_zz, 'twirling': self.twirling}

    @classmethod
    def from_dict(cls, data: dict) -> 'NoiseModel':
        unknown = set(data) - {'p2q', 'readout', 'amplification', 'coherent_zz', 'twirling'}
        if unknown:
            raise ConfigError(f"noise.{sorted(unknown)[0]}", "unknown key")
        readout = data.get('readout', {'p01': 0.0, 'p10': 0.0})
        p01, p10 = readout.get('p01', 0.0), readout.get('p10', 0.0)
        if isinstance(p01, list) or isinstance(p10, list):
            if not (isinstance(p01, list) and isinstance(p10, list) and len(p01) == len(p10)):
                raise ConfigError('noise.readout', "per-qubit p01 and p10 lists must have equal length")
            pairs: Union[Tuple[float, float], List[Tuple[float, float]]] = [(float(a), float(b)) for a, b in zip(p01, p10)]
        else:
            pairs = (float(p01), float(p10))
        return cls(float(data.get('p2q', 0.0)), pairs, float(data.get('amplification', 1.0)),
                   float(data.get('coherent_zz', 0.0)), bool(data.get('twirling', True)))


@dataclass
class ShotResult:
    observable: PauliString
    mean: float
    stderr: float
    shots: Optional[int]
    twirls: int


# --- trajectories -----------------------------------------------------------

def _trajectory(
    gates: Sequence[Tuple[int, np.ndarray]],
    n_qubits: int,
    noise: NoiseModel,
    rng: np.random.Generator,
    policy: TruncationPolicy,
) -> MPSState:
    state = product_state([0] * n_qubits)
    p = noise.gate_error
    for site, unitary in gates:
        if noise.coherent_zz:
            # a random Pauli frame flips the sign of the ZZ error with probability 1/2
            sign = rng.choice((-1.0, 1.0)) if noise.twirling else 1.0
            unitary = zz_rotation(sign * noise.coherent_angle) @ unitary
        state = apply_two_qubit_gate(state, unitary, site, policy)
        if p and rng.random() < p:
            a, b = _PAULI_PAIRS[rng.integers(len(_PAULI_PAIRS))]
            if a != 'I':
                state = apply_single_qubit_gate(state, PAULI[a], site)
            if b != 'I':
                state = apply_single_qubit_gate(state, PAULI[b], site + 1)
    return state


def _measurement_basis(observables: Sequence[PauliString]) -> Dict[int, str]:
    basis: Dict[int, str] = {}
    for obs in observables:
        for site, op in obs.ops.items():
            if basis.setdefault(site, op) != op:
                raise ValueError(f"observables disagree on site {site}: {basis[site]} vs {op}")
    return basis


def _noisy_readout(bits: np.ndarray, sites: Sequence[int], noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Readout under TREX measurement twirling: random X before, classical flip after."""
    mask = rng.integers(0, 2, size=bits.shape, dtype=np.int8)
    flipped = bits ^ mask
    draws = rng.random(bits.shape)
    for column, site in enumerate(sites):
        p01, p10 = noise.readout_for(site)
        col = flipped[:, column]
        error = np.where(col == 0, draws[:, column] < p01, draws[:, column] < p10)
        flipped[:, column] = col ^ error.astype(np.int8)
    return flipped ^ mask


def _parities(outcomes: np.ndarray, sites: Sequence[int], obs: PauliString) -> np.ndarray:
    columns = [sites.index(s) for s in obs.sites]
    if not columns:
        return np.full(outcomes.shape[0], float(obs.sign))
    return obs.sign * (1.0 - 2.0 * (outcomes[:, columns].sum(axis=1) % 2))


# --- TREX -------------------------------------------------------------------

@dataclass
class TrexCalibration:
    """Readout-twirled outcomes of |0...0> on ``qubits``; factors for any Z string among them."""

    qubits: List[int]
    outcomes: np.ndarray

    def factor(self, sites: Iterable[int]) -> Tuple[float, float]:
        sites = sorted(sites)
        if not sites:
            return 1.0, 0.0
        columns = [self.qubits.index(s) for s in sites]
        values = 1.0 - 2.0 * (self.outcomes[:, columns].sum(axis=1) % 2)
        mean = float(values.mean())
        stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        if abs(mean) < MIN_CALIBRATION_FACTOR:
            raise CalibrationError(f"readout attenuation on sites {sites} is {mean:.3e}; cannot invert")
        return mean, stderr


def trex_calibrate(noise: NoiseModel, qubits: Sequence[int], shots: int = DEFAULT_SHOTS, seed: SeedLike = 0) -> TrexCalibration:
    qubits = sorted(set(qubits))
    rng = np.random.default_rng(_as_seed_sequence(seed))
    ideal = np.zeros((shots, len(qubits)), dtype=np.int8)
    calibration = TrexCalibration(qubits, _noisy_readout(ideal, qubits, noise, rng))
    logger.debug(f"TREX calibration on {len(qubits)} qubits with {shots} shots")
    return calibration


# --- estimation -------------------------------------------------------------

def estimate_group(
    circuit: BrickworkCircuit,
    params: Sequence[float],
    observables: Sequence[PauliString],
    noise: NoiseModel,
    shots: Optional[int] = DEFAULT_SHOTS,
    twirls: int = DEFAULT_TWIRLS,
    seed: SeedLike = 0,
    calibration: Optional[TrexCalibration] = None,
    policy: Optional[TruncationPolicy] = None,
) -> List[ShotResult]:
    """Estimate qubit-wise commuting observables from one set of trajectories.

    ``shots=None`` selects analytic mode: each trajectory contributes its exact
    expectation, and readout error, which TREX removes exactly in
    expectation, is skipped. Otherwise readout follows the twirled model and
    means are divided by the TREX factor of each observable's support.
    """
    if noise.gate_error > 1.0:
        raise ValueError(f"amplified error probability {noise.gate_error} exceeds 1")
    if twirls < 1:
        raise ValueError(f"need at least one twirl, got {twirls}")
    if shots is not None and shots < 1:
        raise ValueError(f"need at least one shot, got {shots}")
    for obs in observables:
        if obs.sites and max(obs.sites) >= circuit.n_qubits:
            raise ValueError(f"observable on site {max(obs.sites)} outside {circuit.n_qubits} qubits")
    policy = policy or TruncationPolicy.unlimited()
    basis = _measurement_basis(observables)
    sites = sorted(basis)
    gates = gate_sequence(circuit, params)

    sequence = _as_seed_sequence(seed)
    twirl_seeds = sequence.spawn(twirls + 1)
    per_twirl = np.zeros((twirls, len(observables)))
    shots_per_twirl = None if shots is None else max(1, shots // twirls)
    for t in range(twirls):
        rng = np.random.default_rng(twirl_seeds[t])
        state = _trajectory(gates, circuit.n_qubits, noise, rng, policy)
        if shots_per_twirl is None:
            per_twirl[t] = [expect_pauli(state, obs) for obs in observables]
            continue
        for site, op in basis.items():
            if op in _BASIS_CHANGE:
                state = apply_single_qubit_gate(state, _BASIS_CHANGE[op], site)
        bits = sample_bitstrings(state, sites, shots_per_twirl, rng)
        outcomes = _noisy_readout(bits, sites, noise, rng)
        per_twirl[t] = [_parities(outcomes, sites, obs).mean() for obs in observables]

    means = per_twirl.mean(axis=0)
    stderrs = per_twirl.std(axis=0, ddof=1) / math.sqrt(twirls) if twirls > 1 else np.zeros(len(observables))
    if shots_per_twirl is not None and twirls == 1:
        # a single trajectory: shots are independent draws
        stderrs = np.sqrt(np.maximum(1.0 - means ** 2, 0.0) / shots_per_twirl)

    if shots_per_twirl is not None:
        if calibration is None:
            calibration = trex_calibrate(noise, sites, shots, twirl_seeds[-1])
        for k, obs in enumerate(observables):
            factor, _ = calibration.factor(obs.sites)
            means[k] /= factor
            stderrs[k] /= abs(factor)
    total = None if shots is None else shots_per_twirl * twirls
    return [ShotResult(obs, float(m), float(e), total, twirls) for obs, m, e in zip(observables, means, stderrs)]


def estimate(
    circuit: BrickworkCircuit,
    params: Sequence[float],
    observable: PauliString,
    noise: NoiseModel,
    shots: Optional[int] = DEFAULT_SHOTS,
    twirls: int = DEFAULT_TWIRLS,
    seed: SeedLike = 0,
    calibration: Optional[TrexCalibration] = None,
) -> ShotResult:
    return estimate_group(circuit, params, [observable], noise, shots, twirls, seed, calibration)[0]


# --- zero-noise extrapolation -----------------------------------------------

@dataclass
class ZNEFit:
    noise_factors: List[float]
    values: List[float]
    stderrs: List[float]
    model: str
    extrapolated_value: float
    extrapolated_stderr: float
    fit_residual: float
    reduced_chi2: float
    params: List[float] = field(default_factory=list)
    failed_models: Dict[str, str] = field(default_factory=dict)

    def predict(self, factor: float) -> float:
        return float(_evaluate(self.model, self.params, np.array([factor]))[0])

    def to_dict(self) -> dict:
        return {
            'noise_factors': list(self.noise_factors), 'values': list(self.values), 'stderrs': list(self.stderrs),
            'model': self.model, 'extrapolated_value': self.extrapolated_value,
            'extrapolated_stderr': self.extrapolated_stderr, 'fit_residual': self.fit_residual,
            'reduced_chi2': self.reduced_chi2, 'params': list(self.params), 'failed_models': dict(self.failed_models),
        }


_MODEL_SIZES = {'linear': 2, 'quadratic': 3, 'exponential': 3}


def _exponential(x, a, b, c):
    return a * np.exp(-b * x) + c


def _evaluate(model: str, params: Sequence[float], x: np.ndarray) -> np.ndarray:
    if model == 'exponential':
        return _exponential(x, *params)
    return np.polyval(params, x)


def _fit_model(model: str, x: np.ndarray, y: np.ndarray, sigma: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray, float]:
    """(params, covariance, value at zero); raises on a degenerate fit."""
    with warnings.catch_warnings():
        warnings.simplefilter('error', RankWarning)
        warnings.simplefilter('error', OptimizeWarning)
        if model in ('linear', 'quadratic'):
            deg = 1 if model == 'linear' else 2
            weights = None if sigma is None else 1.0 / sigma
            params, cov = np.polyfit(x, y, deg, w=weights, cov='unscaled' if sigma is not None else True)
            return params, cov, float(params[-1])
        linear = np.polyfit(x, y, 1)
        if np.all(y > 0) or np.all(y < 0):
            slope, intercept = np.polyfit(x, np.log(np.abs(y)), 1)
            guess = (float(np.sign(y[0]) * np.exp(intercept)), float(-slope), 0.0)
        else:
            guess = (float(linear[1]), 0.1, 0.0)
        params, cov = curve_fit(_exponential, x, y, p0=guess, sigma=sigma, absolute_sigma=sigma is not None,
                                maxfev=20000)
        return params, cov, float(params[0] + params[2])


def _zero_gradient(model: str, n_params: int) -> np.ndarray:
    grad = np.zeros(n_params)
    if model == 'exponential':
        grad[0] = grad[2] = 1.0
    else:
        grad[-1] = 1.0
    return grad


def zne_extrapolate(
    series: Sequence[Tuple[float, float, float]],
    models: Iterable[str] = ZNE_MODELS,
) -> ZNEFit:
    """Fit every candidate model to (factor, value, stderr) points and extrapolate to zero noise.

    Fits are weighted by 1/stderr when every stderr is positive. The model
    with the lowest reduced chi-square wins; ties go to fewer parameters.
    """
    models = [m for m in ZNE_MODELS if m in set(models)]
    if not models:
        raise ValueError("no extrapolation model selected")
    points = sorted(series)
    if len(points) < 3:
        raise ValueError(f"zero-noise extrapolation needs at least 3 noise factors, got {len(points)}")
    x = np.array([p[0] for p in points], dtype=np.float64)
    y = np.array([p[1] for p in points], dtype=np.float64)
    e = np.array([p[2] for p in points], dtype=np.float64)
    if np.any(x < 1.0):
        raise ValueError(f"noise factors must be >= 1, got {x.min()}")
    sigma = e if np.all(e > 0) else None
    weights = np.ones_like(y) if sigma is None else 1.0 / sigma ** 2
    tol = 1e-12 if sigma is None else 1e-9

    candidates = []
    failed: Dict[str, str] = {}
    for model in models:
        n_params = _MODEL_SIZES[model]
        dof = x.size - n_params
        if dof <= 0:
            failed[model] = f"{x.size} points cannot constrain {n_params} parameters"
            continue
        try:
            params, cov, value = _fit_model(model, x, y, sigma)
        except (RuntimeError, ValueError, TypeError, np.linalg.LinAlgError, RankWarning, OptimizeWarning) as exc:
            failed[model] = str(exc) or type(exc).__name__
            logger.warning(f"ZNE {model} fit failed: {failed[model]}")
            continue
        residuals = y - _evaluate(model, params, x)
        chi2 = float(np.sum(weights * residuals ** 2))
        grad = _zero_gradient(model, n_params)
        variance = float(grad @ cov @ grad)
        if not (np.isfinite(value) and np.isfinite(variance)):
            failed[model] = "non-finite fit"
            logger.warning(f"ZNE {model} fit failed: non-finite fit")
            continue
        candidates.append((chi2 / dof, n_params, model, params, value, math.sqrt(max(variance, 0.0)),
                           float(np.sum(residuals ** 2))))
    if not candidates:
        raise FitError(f"every extrapolation model failed: {failed}")

    best = min(candidates, key=lambda c: c[0])
    tied = [c for c in candidates if c[0] <= best[0] + tol]
    chosen = min(tied, key=lambda c: c[1])
    red_chi2, _, model, params, value, stderr, residual = chosen
    logger.info(f"ZNE: {model} model selected, zero-noise value {value:.6f} +/- {stderr:.2e}")
    return ZNEFit(
        noise_factors=list(x), values=list(y), stderrs=list(e), model=model,
        extrapolated_value=value, extrapolated_stderr=stderr, fit_residual=residual,
        reduced_chi2=red_chi2, params=[float(p) for p in params], failed_models=failed,
    )


def zne_group(
    circuit: BrickworkCircuit,
    params: Sequence[float],
    observables: Sequence[PauliString],
    noise: NoiseModel,
    factors: Sequence[float] = DEFAULT_NOISE_FACTORS,
    models: Iterable[str] = ZNE_MODELS,
    shots: Optional[int] = DEFAULT_SHOTS,
    twirls: int = DEFAULT_TWIRLS,
    seed: SeedLike = 0,
    calibration: Optional[TrexCalibration] = None,
) -> List[ZNEFit]:
    """Estimate the observables at every noise factor and extrapolate each one."""
    children = _as_seed_sequence(seed).spawn(len(factors))
    if calibration is None and shots is not None:
        sites = sorted(_measurement_basis(observables))
        calibration = trex_calibrate(noise, sites, shots, children[0].spawn(1)[0])
    runs = [
        estimate_group(circuit, params, observables, noise.amplified(f), shots, twirls, child, calibration)
        for f, child in zip(factors, children)
    ]
    fits = []
    for k in range(len(observables)):
        fits.append(zne_extrapolate([(f, run[k].mean, run[k].stderr) for f, run in zip(factors, runs)], models))
    return fits


# --- identity validation ----------------------------------------------------

@dataclass
class IdentityValidation:
    fits: Dict[int, ZNEFit]
    flagged: List[int]
    threshold: float

    def to_dict(self) -> dict:
        return {
            'threshold': self.threshold,
            'flagged': list(self.flagged),
            'qubits': {str(q): fit.to_dict() for q, fit in self.fits.items()},
        }


def identity_circuit_validation(
    circuit: BrickworkCircuit,
    noise: NoiseModel,
    shots: Optional[int] = DEFAULT_SHOTS,
    seed: SeedLike = 0,
    twirls: int = DEFAULT_TWIRLS,
    factors: Sequence[float] = DEFAULT_NOISE_FACTORS,
    threshold: float = DEFAULT_FLAG_THRESHOLD,
    models: Iterable[str] = ('linear',),
    calibration_noise: Optional[NoiseModel] = None,
) -> IdentityValidation:
    """Run the mitigation stack on the circuit skeleton with identity gates and check <Z_i> -> 1.

    ``calibration_noise`` is the readout model TREX is calibrated against
    (``noise`` when absent); a qubit whose actual readout drifted from it shows
    up as a residual deviation and is flagged.
    """
    identity = np.zeros(circuit.n_full_params)
    observables = [PauliString({q: 'Z'}) for q in range(circuit.n_qubits)]
    sequence = _as_seed_sequence(seed)
    cal_seed, run_seed = sequence.spawn(2)
    calibration = None
    if shots is not None:
        calibration = trex_calibrate(calibration_noise or noise, range(circuit.n_qubits), shots, cal_seed)
    fits = zne_group(circuit, identity, observables, noise, factors, models, shots, twirls, run_seed, calibration)
    result = {q: fit for q, fit in enumerate(fits)}
    flagged = [q for q, fit in result.items() if abs(fit.extrapolated_value - 1.0) > threshold]
    if flagged:
        logger.warning(f"identity validation flagged qubits {flagged}")
    else:
        logger.info(f"identity validation passed on {circuit.n_qubits} qubits")
    return IdentityValidation(result, flagged, threshold)


# --- provider ---------------------------------------------------------------

class ZneProvider:
    """Expectation provider backed by the noisy sampler.

    With ``zne`` on, each query runs every noise factor and reports the
    extrapolated value; otherwise it reports the twirled, TREX-corrected value
    at the base noise level. Queries draw successive seed substreams, so the
    provider is deterministic for a fixed query order and not safe to share.
    """

    concurrent_safe = False

    def __init__(
        self,
        circuit: BrickworkCircuit,
        params: Sequence[float],
        noise: NoiseModel,
        shots: Optional[int] = DEFAULT_SHOTS,
        twirls: int = DEFAULT_TWIRLS,
        seed: SeedLike = 0,
        factors: Sequence[float] = DEFAULT_NOISE_FACTORS,
        models: Iterable[str] = ZNE_MODELS,
        zne: bool = True,
    ):
        self.circuit = circuit
        self.params = np.asarray(params, dtype=np.float64)
        self.noise = noise
        self.shots = shots
        self.twirls = twirls
        self.factors = tuple(factors)
        self.models = tuple(models)
        self.zne = zne
        self.n_sites = circuit.n_qubits
        self.fits: Dict[PauliString, ZNEFit] = {}
        self._sequence = _as_seed_sequence(seed)
        self._calibration: Optional[TrexCalibration] = None
        if shots is not None:
            self._calibration = trex_calibrate(noise, range(circuit.n_qubits), shots, self._sequence.spawn(1)[0])

    def expect(self, p: PauliString) -> Tuple[float, float]:
        return self.expect_group([p])[0]

    def expect_group(self, ps: Sequence[PauliString]) -> List[Tuple[float, float]]:
        out: List[Optional[Tuple[float, float]]] = [None] * len(ps)
        # split into batches that share one measurement basis
        batches: List[Tuple[Dict[int, str], List[int]]] = []
        for k, p in enumerate(ps):
            if p.is_identity:
                out[k] = (float(p.sign), 0.0)
                continue
            for basis, members in batches:
                if all(basis.get(s, op) == op for s, op in p.ops.items()):
                    basis.update(p.ops)
                    members.append(k)
                    break
            else:
                batches.append((dict(p.ops), [k]))
        for _, members in batches:
            group = [ps[k] for k in members]
            seed = self._sequence.spawn(1)[0]
            if self.zne:
                fits = zne_group(self.circuit, self.params, group, self.noise, self.factors, self.models,
                                 self.shots, self.twirls, seed, self._calibration)
                for k, fit in zip(members, fits):
                    self.fits[ps[k]] = fit
                    out[k] = (fit.extrapolated_value, fit.extrapolated_stderr)
            else:
                results = estimate_group(self.circuit, self.params, group, self.noise, self.shots, self.twirls,
                                         seed, self._calibration)
                for k, res in zip(members, results):
                    out[k] = (res.mean, res.stderr)
        return out
