# core/pipeline.py
"""
End-to-end driver: dmrg -> compress -> compile -> measure -> report.

Each stage writes its artifacts under ``output_dir/<stage>/`` and appends a
record to the manifest. Nothing nondeterministic (wall time, host names) goes
into artifacts unless timing is requested, so reruns of the same config and
seed reproduce every hash.
"""

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.aqc import AqcConfig, AqcResult, optimize
from core.circuit import (
    BrickworkCircuit,
    build_brickwork,
    expand_parameters,
    export_qasm,
    initial_parameters,
    metrics,
    parameter_count,
    simulate,
)
from core.dmrg import DmrgResult, default_initial_state, default_target_sector, run_dmrg
from core.exceptions import FitError, StageError
from core.lattice import MPO, CouplingPattern, PhaseLabel, build_hamiltonian_mpo, named_phase_points
from core.mps import MPSState, compress, mpo_expectation
from core.noisy_sampler import ZNEFit, ZneProvider, identity_circuit_validation
from core.observables import (
    DEFAULT_EDGE_MARGIN,
    BootstrapSpectrum,
    EdgeFit,
    ExactProvider,
    ExpectationProvider,
    StringOrderRequest,
    StringOrderResult,
    bootstrap_spectrum,
    cut_lengths,
    fit_edge_decay,
    magnetization_profile,
    measure_pauli_strings,
    string_order,
)
from core.persistence import file_record, save_circuit, save_mps, write_json, write_text
from utils.config import CompressionConfig, MeasurementConfig, PipelineConfig
from utils.logger import get_logger
from utils.scheduler import CampaignEntry, CampaignOutcome, pick_best, plan_campaign
from utils.security import artifact_path
from viewmodels.result_tables import (
    magnetization_table,
    spectrum_table,
    string_order_summary_table,
    string_order_table,
    zne_table,
)

logger = get_logger(__name__)

STAGES = ('dmrg', 'compress', 'compile', 'measure', 'report')
MANIFEST_VERSION = 1


@dataclass
class StageRecord:
    name: str
    inputs: List[Dict[str, str]] = field(default_factory=list)
    outputs: List[Dict[str, str]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def hash(self) -> str:
        payload = json.dumps({'inputs': self.inputs, 'outputs': self.outputs}, sort_keys=True)
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()

    def to_dict(self, timing: bool = False) -> Dict[str, Any]:
        data = {'name': self.name, 'inputs': self.inputs, 'outputs': self.outputs, 'hash': self.hash}
        if timing:
            data['wall_time'] = self.wall_time
        return data


@dataclass
class CompressionResult:
    state: MPSState
    chi: int
    fidelity: float
    energy: Optional[float] = None

    def summary(self) -> Dict[str, Any]:
        return {'chi': self.chi, 'fidelity': self.fidelity, 'energy': self.energy}


@dataclass
class CampaignReport:
    circuit: BrickworkCircuit
    full_params: np.ndarray
    best: AqcResult
    best_entry: CampaignEntry
    runs: List[Tuple[CampaignEntry, AqcResult]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'best': {**self.best_entry.to_dict(), **self.best.to_dict()},
            'runs': [
                {**entry.to_dict(), 'fidelity': result.fidelity_vs_compressed,
                 'cnot_depth': result.metrics.get('cnot_depth'), 'terminated_by': result.terminated_by.value,
                 'iterations': result.iterations}
                for entry, result in self.runs
            ],
        }


@dataclass
class MeasurementReport:
    source: str
    string_order: Dict[str, StringOrderResult] = field(default_factory=dict)
    magnetization: Optional[Tuple[np.ndarray, np.ndarray]] = None
    spectra: Dict[str, Dict[int, BootstrapSpectrum]] = field(default_factory=dict)
    edge_fit: Optional[EdgeFit] = None
    zne_fits: Dict[str, ZNEFit] = field(default_factory=dict)

    def degeneracy(self) -> Dict[str, Dict[int, float]]:
        """lambda_1 - lambda_2 of every measured segment, keyed by cut family."""
        out: Dict[str, Dict[int, float]] = {}
        for cut, spectra in self.spectra.items():
            out[cut] = {l: float(s.mean_eigenvalues[0] - s.mean_eigenvalues[1]) for l, s in spectra.items()}
        return out

    def summary(self) -> Dict[str, Any]:
        return {
            'source': self.source,
            'string_order': {
                parity: {str(l): {'mean': m, 'stderr': e} for l, (m, e) in sorted(res.means.items())}
                for parity, res in self.string_order.items()
            },
            'degeneracy': {cut: {str(l): v for l, v in sorted(d.items())} for cut, d in self.degeneracy().items()},
            'edge_fit': self.edge_fit.to_dict() if self.edge_fit else None,
        }


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1)[0])


def pauli_name(p) -> str:
    body = ''.join(f"{op}{site}" for site, op in p.ops.items()) or 'I'
    return body if p.sign > 0 else f"-{body}"


# --- dmrg -------------------------------------------------------------------

def ground_state_stage(cfg: PipelineConfig) -> Tuple[DmrgResult, MPO]:
    model = cfg.model
    mpo = build_hamiltonian_mpo(model)
    dmrg_cfg = cfg.dmrg
    if dmrg_cfg.target_sector is None:
        sector = default_target_sector(model)
        if sector is not None:
            dmrg_cfg = replace(dmrg_cfg, target_sector=sector)
    logger.info(f"DMRG on N={model.n_sites}, j0={model.j0}, j1={model.j1} "
                f"({model.phase.value}), sector={dmrg_cfg.target_sector}")
    return run_dmrg(mpo, default_initial_state(model), dmrg_cfg), mpo


# --- compress ---------------------------------------------------------------

def compress_stage(state: MPSState, cfg: CompressionConfig, hamiltonian: Optional[MPO] = None) -> CompressionResult:
    """Fixed-chi compression, or the smallest chi reaching ``fidelity_floor`` when chi is unset."""
    if cfg.chi is not None:
        chis: Sequence[int] = [cfg.chi]
    else:
        chis = range(1, max(cfg.max_chi, 1) + 1)
    compressed, fid, chi = state, 0.0, 0
    for chi in chis:
        compressed, fid = compress(state, chi, cfg.sweeps)
        logger.info(f"compression to chi={chi}: fidelity {fid:.6f}")
        if cfg.chi is not None or fid >= cfg.fidelity_floor:
            break
    else:
        logger.warning(f"no chi <= {cfg.max_chi} reaches fidelity {cfg.fidelity_floor}; keeping chi={chi}")
    energy = mpo_expectation(compressed, hamiltonian) if hamiltonian is not None else None
    return CompressionResult(compressed, compressed.max_bond_dimension(), fid, energy)


# --- compile ----------------------------------------------------------------

def init_phase(model: CouplingPattern) -> Optional[PhaseLabel]:
    phase = model.phase
    return phase if phase in (PhaseLabel.EVEN_HALDANE, PhaseLabel.ODD_HALDANE) else None


def compile_run(
    entry: CampaignEntry,
    n_qubits: int,
    phase: Optional[PhaseLabel],
    target: MPSState,
    aqc: AqcConfig,
    uncompressed: Optional[MPSState] = None,
    hamiltonian: Optional[MPO] = None,
) -> Tuple[BrickworkCircuit, AqcResult]:
    circuit = build_brickwork(n_qubits, entry.layers, phase)
    theta0 = initial_parameters(circuit, phase) if phase is not None else np.zeros(parameter_count(circuit))
    logger.info(f"compile run {entry.run} at L={circuit.total_layers} (seed {entry.seed})")
    result = optimize(circuit, theta0, target, replace(aqc, seed=entry.seed), uncompressed, hamiltonian)
    return circuit, result


def compile_stage(
    cfg: PipelineConfig,
    target: MPSState,
    uncompressed: Optional[MPSState] = None,
    hamiltonian: Optional[MPO] = None,
    seed: Optional[np.random.SeedSequence] = None,
) -> CampaignReport:
    """Run the layer campaign on a thread pool and keep the winning circuit."""
    plan = plan_campaign(cfg.campaign.layers, cfg.campaign.runs_per_layer,
                         seed if seed is not None else cfg.seed)
    phase = init_phase(cfg.model)

    def work(entry: CampaignEntry) -> Tuple[BrickworkCircuit, AqcResult]:
        return compile_run(entry, cfg.model.n_sites, phase, target, cfg.aqc, uncompressed, hamiltonian)

    with ThreadPoolExecutor(max_workers=cfg.campaign.workers) as pool:
        finished = list(pool.map(work, plan))

    outcomes = [
        CampaignOutcome(entry, result.fidelity_vs_compressed, metrics(circuit).cnot_depth)
        for entry, (circuit, result) in zip(plan, finished)
    ]
    best = pick_best(outcomes)
    index = outcomes.index(best)
    circuit, result = finished[index]
    logger.info(f"campaign winner: L={best.entry.layers} run {best.entry.run}, "
                f"fidelity {best.fidelity:.6f}, CNOT depth {best.cnot_depth}")
    return CampaignReport(
        circuit=circuit,
        full_params=expand_parameters(circuit, result.params),
        best=result,
        best_entry=best.entry,
        runs=[(entry, res) for entry, (_, res) in zip(plan, finished)],
    )


# --- measure ----------------------------------------------------------------

def string_order_request(parity: str, n_sites: int, mcfg: Optional[MeasurementConfig] = None) -> Optional[StringOrderRequest]:
    """Configured windows, the standard windows when they fit, or a single centred window.

    Returns None when the chain is too short for any string of this parity.
    """
    lengths = mcfg.string_lengths if mcfg else None
    starts = (mcfg.start_sites or {}).get(parity) if mcfg else None
    margin = mcfg.edge_margin if mcfg else None
    if lengths is not None or starts is not None or margin is not None:
        kwargs: Dict[str, Any] = {'edge_margin': DEFAULT_EDGE_MARGIN if margin is None else margin}
        if lengths is not None:
            kwargs['lengths'] = tuple(lengths)
        return StringOrderRequest(parity, start_sites=starts, **kwargs)
    standard = StringOrderRequest(parity)
    try:
        standard.validate_window(n_sites)
        return standard
    except ValueError:
        pass
    margin = (n_sites // 5) // 2 * 2
    offset = 0 if parity == 'even' else 1
    max_l = (n_sites - 2 * margin - offset) // 2 * 2
    if max_l < 2:
        logger.info(f"{n_sites}-site chain is too short for {parity} strings")
        return None
    return StringOrderRequest(parity, tuple(range(2, max_l + 1, 2)), (margin + offset,), margin)


def measure_string_order(
    provider: ExpectationProvider, mcfg: Optional[MeasurementConfig] = None, parities: Sequence[str] = ('even', 'odd')
) -> Dict[str, StringOrderResult]:
    out = {}
    for parity in parities:
        req = string_order_request(parity, provider.n_sites, mcfg)
        if req is not None:
            out[parity] = string_order(provider, req)
    return out


def measure_spectrum(
    provider: ExpectationProvider, max_l: int, cut: str, samples: int, seed: np.random.SeedSequence
) -> Dict[int, BootstrapSpectrum]:
    """Bootstrapped spectra of the left segments ending on ``cut`` bonds."""
    max_l = min(max_l, provider.n_sites - 1)
    out = {}
    for l, child in zip(cut_lengths(max_l, cut), seed.spawn(max_l)):
        estimates = measure_pauli_strings(provider, range(l))
        spectrum = bootstrap_spectrum({k: v for k, (v, _) in estimates.items()},
                                      {k: e for k, (_, e) in estimates.items()}, samples, _seed_int(child))
        out[l] = spectrum
        logger.info(f"{cut} cut, l={l}: leading eigenvalues {spectrum.mean_eigenvalues[:2]}")
    return out


def measure_edges(
    provider: ExpectationProvider, n_cells: int
) -> Tuple[Tuple[np.ndarray, np.ndarray], Optional[EdgeFit]]:
    values, errs = magnetization_profile(provider)
    n_cells = min(n_cells, provider.n_sites // 4)
    try:
        fit = fit_edge_decay(values, n_cells, errs if np.any(errs > 0) else None)
    except (FitError, ValueError) as e:
        logger.warning(f"edge fit skipped: {e}")
        return (values, errs), None
    logger.info(f"edge correlation length xi = {fit.xi:.4f} +/- {fit.fit_stderr:.4f}")
    return (values, errs), fit


def noisy_provider(
    cfg: PipelineConfig, circuit: BrickworkCircuit, full_params: np.ndarray,
    seed: np.random.SeedSequence, models: Optional[Sequence[str]] = None,
) -> ZneProvider:
    z = cfg.measurement.zne
    return ZneProvider(circuit, full_params, cfg.measurement.noise, z.shots, z.twirls, seed,
                       z.factors, models or z.models, z.enabled)


def measure_stage(
    cfg: PipelineConfig,
    ground: MPSState,
    circuit: Optional[BrickworkCircuit] = None,
    full_params: Optional[np.ndarray] = None,
    compiled: Optional[MPSState] = None,
    seed: Optional[np.random.SeedSequence] = None,
) -> MeasurementReport:
    """Observables on the configured source: the DMRG state, the compiled state, or noisy shots."""
    mcfg = cfg.measurement
    seq = seed if seed is not None else np.random.SeedSequence(cfg.seed)
    main_seed, mag_seed, j0_seed, j1_seed = seq.spawn(4)
    if mcfg.source != 'ground_state' and circuit is None:
        raise ValueError(f"the {mcfg.source} source needs a compiled circuit")
    report = MeasurementReport(mcfg.source)
    if mcfg.source == 'ground_state':
        provider: ExpectationProvider = ExactProvider(ground)
        mag_provider: ExpectationProvider = provider
    elif mcfg.source == 'compiled':
        if compiled is None:
            compiled = simulate(circuit, full_params, cfg.aqc.policy_for(ground))
        provider = mag_provider = ExactProvider(compiled)
    else:
        provider = noisy_provider(cfg, circuit, full_params, main_seed)
        mag_provider = noisy_provider(cfg, circuit, full_params, mag_seed, mcfg.zne.magnetization_models)

    report.string_order = measure_string_order(provider, mcfg)
    for cut, cut_seed in (('j0', j0_seed), ('j1', j1_seed)):
        report.spectra[cut] = measure_spectrum(provider, mcfg.tomography_max_l, cut, mcfg.bootstrap_samples, cut_seed)
    if cfg.model.phase == PhaseLabel.ODD_HALDANE:
        report.magnetization, report.edge_fit = measure_edges(mag_provider, mcfg.edge_cells)
    else:
        report.magnetization = magnetization_profile(mag_provider)
    for p in (provider, mag_provider):
        for obs, fit in getattr(p, 'fits', {}).items():
            report.zne_fits[pauli_name(obs)] = fit
    return report


# --- artifacts --------------------------------------------------------------

class _Recorder:
    """Collects the stage records of one run."""

    def __init__(self, output_dir: Path, timing: bool) -> None:
        self.output_dir = output_dir
        self.timing = timing
        self.stages: List[StageRecord] = []

    def path(self, name: str) -> Path:
        return artifact_path(str(self.output_dir), name)

    def records(self, paths: Sequence[Path]) -> List[Dict[str, str]]:
        return [file_record(p, self.output_dir) for p in paths]

    def run(self, name: str, inputs: Sequence[Path], body: Callable[[], List[Path]]) -> None:
        logger.info(f"stage '{name}' started")
        start = time.perf_counter()
        try:
            outputs = body()
        except Exception as e:
            logger.error(f"stage '{name}' failed: {e}")
            manifest = self.manifest()
            self.write_manifest(manifest)
            raise StageError(name, str(e), [s.name for s in self.stages], manifest) from e
        record = StageRecord(name, self.records(inputs), self.records(outputs), time.perf_counter() - start)
        self.stages.append(record)
        logger.info(f"stage '{name}' finished in {record.wall_time:.2f}s, {len(outputs)} artifacts")

    def manifest(self) -> Dict[str, Any]:
        return {'version': MANIFEST_VERSION, 'stages': [s.to_dict(self.timing) for s in self.stages]}

    def write_manifest(self, manifest: Dict[str, Any]) -> Path:
        path = self.path('manifest.json')
        write_json(path, manifest)
        return path


def write_measurement_tables(report: MeasurementReport, directory: Path) -> List[Path]:
    written = []
    zne_used = report.source == 'noisy'
    for parity, result in sorted(report.string_order.items()):
        path = directory / f"string_order_{parity}.csv"
        string_order_table(result, zne_used).to_csv(path)
        written.append(path)
    if report.string_order:
        path = directory / "string_order_summary.csv"
        string_order_summary_table([report.string_order[p] for p in sorted(report.string_order)]).to_csv(path)
        written.append(path)
    if report.magnetization is not None:
        path = directory / "magnetization.csv"
        magnetization_table(*report.magnetization).to_csv(path)
        written.append(path)
    for cut, spectra in sorted(report.spectra.items()):
        path = directory / f"spectrum_{cut}.csv"
        spectrum_table(spectra).to_csv(path)
        written.append(path)
    if report.edge_fit is not None:
        path = directory / "edge_fit.json"
        write_json(path, report.edge_fit.to_dict())
        written.append(path)
    if report.zne_fits:
        path = directory / "zne.csv"
        zne_table(report.zne_fits).to_csv(path)
        written.append(path)
        path = directory / "zne_fits.json"
        write_json(path, {name: fit.to_dict() for name, fit in sorted(report.zne_fits.items())})
        written.append(path)
    return written


def run_pipeline(cfg: PipelineConfig, record_timing: bool = False) -> Dict[str, Any]:
    """Run every stage and return the manifest, which is also written to ``output_dir``.

    A failing stage raises StageError after the manifest of the completed
    stages has been written. Configs naming ``phase_points`` are handed to
    run_phase_sweep.
    """
    if cfg.phase_points:
        return run_phase_sweep(cfg, record_timing)
    out = Path(cfg.output_dir).resolve()
    out.mkdir(parents=True, exist_ok=True)
    rec = _Recorder(out, record_timing)
    campaign_seed, measure_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    config_path = rec.path('config.json')
    write_json(config_path, cfg.to_dict())
    ctx: Dict[str, Any] = {}

    def dmrg() -> List[Path]:
        result, mpo = ground_state_stage(cfg)
        ctx['dmrg'], ctx['mpo'] = result, mpo
        state_path, summary_path = rec.path('dmrg/ground_state.json'), rec.path('dmrg/summary.json')
        save_mps(state_path, result.state)
        write_json(summary_path, result.summary(cfg.model))
        return [state_path, summary_path]

    def compress_() -> List[Path]:
        result = compress_stage(ctx['dmrg'].state, cfg.compression, ctx['mpo'])
        ctx['compressed'] = result
        state_path, summary_path = rec.path('compress/compressed.json'), rec.path('compress/summary.json')
        save_mps(state_path, result.state)
        write_json(summary_path, result.summary())
        return [state_path, summary_path]

    def compile_() -> List[Path]:
        report = compile_stage(cfg, ctx['compressed'].state, ctx['dmrg'].state, ctx['mpo'], campaign_seed)
        ctx['campaign'] = report
        paths = [rec.path(name) for name in
                 ('compile/circuit.json', 'compile/circuit.qasm', 'compile/aqc_result.json', 'compile/campaign.json')]
        save_circuit(paths[0], report.circuit, report.full_params)
        write_text(paths[1], export_qasm(report.circuit, report.full_params))
        write_json(paths[2], report.best.to_dict())
        write_json(paths[3], report.to_dict())
        return paths

    def measure() -> List[Path]:
        campaign = ctx['campaign']
        report = measure_stage(cfg, ctx['dmrg'].state, campaign.circuit, campaign.full_params, seed=measure_seed)
        ctx['measurement'] = report
        return write_measurement_tables(report, rec.path('measure'))

    def report_() -> List[Path]:
        path = rec.path('report/report.json')
        write_json(path, build_report(cfg, ctx['dmrg'], ctx['compressed'], ctx['campaign'], ctx['measurement']))
        return [path]

    rec.run('dmrg', [config_path], dmrg)
    rec.run('compress', [rec.path('dmrg/ground_state.json')], compress_)
    rec.run('compile', [rec.path('compress/compressed.json')], compile_)
    rec.run('measure', [rec.path('compile/circuit.json')], measure)
    rec.run('report', [rec.path('dmrg/summary.json'), rec.path('compress/summary.json'),
                       rec.path('compile/aqc_result.json')], report_)
    manifest = rec.manifest()
    manifest['energy'] = ctx['dmrg'].energy
    rec.write_manifest(manifest)
    logger.info(f"pipeline finished, manifest at {out / 'manifest.json'}")
    return manifest


def point_directory(name: str) -> str:
    return name.replace('/', '_')


def point_config(cfg: PipelineConfig, name: str, seed: int) -> PipelineConfig:
    """Single-point copy of a sweep config, writing under ``output_dir/<point>``."""
    point = named_phase_points()[name]
    return replace(
        cfg,
        model=point.pattern(cfg.model.n_sites),
        phase_points=None,
        output_dir=str(Path(cfg.output_dir) / point_directory(name)),
        seed=seed,
    )


def run_phase_sweep(cfg: PipelineConfig, record_timing: bool = False) -> Dict[str, Any]:
    """Run the pipeline once per configured phase point, concurrently.

    Each point gets its own directory, its own seed spawned from ``cfg.seed``
    and its own manifest. The sweep manifest records one ground-state energy
    per point next to the hash of that point's manifest. A failing point
    raises StageError once every other point has finished.
    """
    out = Path(cfg.output_dir).resolve()
    out.mkdir(parents=True, exist_ok=True)
    names = list(cfg.phase_points or [])
    seeds = [_seed_int(s) for s in np.random.SeedSequence(cfg.seed).spawn(len(names))]
    configs = {name: point_config(cfg, name, seed) for name, seed in zip(names, seeds)}
    config_path = artifact_path(str(out), 'config.json')
    write_json(config_path, cfg.to_dict())
    logger.info(f"phase sweep over {', '.join(names)} on N={cfg.model.n_sites}")

    with ThreadPoolExecutor(max_workers=max(len(names), 1)) as pool:
        futures = {name: pool.submit(run_pipeline, configs[name], record_timing) for name in names}
        outcomes: Dict[str, Any] = {}
        for name, future in futures.items():
            try:
                outcomes[name] = future.result()
            except StageError as e:
                logger.error(f"phase point {name} failed in stage '{e.stage}'")
                outcomes[name] = e

    reference = named_phase_points()
    points: Dict[str, Any] = {}
    failed: Dict[str, str] = {}
    for name in names:
        result = outcomes[name]
        if isinstance(result, StageError):
            failed[name] = result.stage
            continue
        point_manifest = Path(configs[name].output_dir).resolve() / 'manifest.json'
        points[name] = {
            'phase': configs[name].model.phase.value,
            'model': configs[name].model.to_dict(),
            'energy': result['energy'],
            'reference_energy': reference[name].energy,
            'manifest': file_record(point_manifest, out),
        }
        logger.info(f"{name}: E = {result['energy']:.6f}")
    manifest: Dict[str, Any] = {
        'version': MANIFEST_VERSION,
        'config': file_record(config_path, out),
        'points': points,
        'energies': {name: entry['energy'] for name, entry in points.items()},
    }
    if failed:
        manifest['failed'] = failed
    write_json(artifact_path(str(out), 'manifest.json'), manifest)
    if failed:
        name = next(iter(failed))
        raise StageError(f"{name}/{failed[name]}", f"{len(failed)} of {len(names)} phase points failed",
                         list(points), manifest)
    logger.info(f"phase sweep finished, manifest at {out / 'manifest.json'}")
    return manifest


def build_report(
    cfg: PipelineConfig,
    dmrg: DmrgResult,
    compressed: CompressionResult,
    campaign: CampaignReport,
    measurement: MeasurementReport,
) -> Dict[str, Any]:
    """One row of the energy / fidelity / resource summary plus the observable headlines."""
    best = campaign.best
    return {
        'model': cfg.model.to_dict(),
        'phase': cfg.model.phase.value,
        'dmrg': dmrg.summary(cfg.model),
        'compression': compressed.summary(),
        'compile': {
            'layers': campaign.circuit.total_layers,
            'metrics': dict(best.metrics),
            'fidelities': best.to_dict()['fidelities'],
            'compiled_energy': best.compiled_energy,
            'terminated_by': best.terminated_by.value,
            'warnings': list(best.warnings),
        },
        'measurement': measurement.summary(),
    }


def validate_skeleton(cfg: PipelineConfig, circuit: BrickworkCircuit, seed: Optional[int] = None) -> Dict[str, Any]:
    """Identity-circuit check of the configured noise model on ``circuit``'s skeleton."""
    if cfg.measurement.noise is None:
        raise ValueError("identity validation needs a noise model in measurement.noise")
    z = cfg.measurement.zne
    result = identity_circuit_validation(
        circuit, cfg.measurement.noise, z.shots, cfg.seed if seed is None else seed, z.twirls, z.factors,
        models=z.magnetization_models,
    )
    return result.to_dict()
