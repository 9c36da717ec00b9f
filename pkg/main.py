# main.py

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from core.circuit import build_brickwork, export_qasm, simulate
from core.lattice import CouplingPattern, build_hamiltonian_mpo
from core.noisy_sampler import NoiseModel
from core.observables import ExactProvider
from core.persistence import load_circuit, load_mps, read_json, save_circuit, save_mps, write_json, write_text
from core.pipeline import (
    compile_stage,
    compress_stage,
    ground_state_stage,
    measure_edges,
    measure_spectrum,
    measure_string_order,
    noisy_provider,
    pauli_name,
    run_pipeline,
    validate_skeleton,
    MeasurementReport,
    write_measurement_tables,
)
from utils.config import ConfigManager, PipelineConfig
from utils.logger import get_logger, set_verbose
from utils.security import artifact_path

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='spt-toolkit',
        description="Ground states, circuit compilation and noisy measurement of the bond-alternating Heisenberg chain.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, help="Pipeline config JSON (created with defaults if absent).")
    common.add_argument('--output', default=None, help="Output directory (overrides output_dir).")
    common.add_argument('--seed', type=int, default=None, help="Master seed (overrides seed).")
    common.add_argument('--model', default=None, help="Standalone model JSON {j0, j1, n_sites}.")
    common.add_argument('--noise', default=None, help="Standalone noise JSON {p2q, readout: {p01, p10}}.")
    common.add_argument('--verbose', action='store_true', help="Log per-sweep and per-bond diagnostics (DEBUG).")

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', parents=[common], help="Run every stage and write a manifest.")
    p.add_argument('--timing', action='store_true', help="Record per-stage wall time in the manifest.")
    p.add_argument('--phase-points', nargs='+', default=None,
                   help="Named phase points (or 'table1') run concurrently at the configured chain length.")

    sub.add_parser('dmrg', parents=[common], help="Ground state of the configured model.")

    p = sub.add_parser('compress', parents=[common], help="Compress an MPS to a small bond dimension.")
    p.add_argument('--state', required=True, help="MPS JSON to compress.")
    p.add_argument('--chi', type=int, default=None, help="Fixed bond dimension; default searches the smallest.")

    p = sub.add_parser('compile', parents=[common], help="Compile an MPS into a brickwork circuit.")
    p.add_argument('--target', required=True, help="Target MPS JSON.")
    p.add_argument('--layers', type=float, nargs='+', default=None, help="Layer counts (multiples of 1/2).")
    p.add_argument('--uncompressed', default=None, help="Uncompressed MPS JSON for the second fidelity.")

    for name, text in (('measure-string-order', "String order parameters."),
                       ('measure-spectrum', "Entanglement spectra by Pauli tomography."),
                       ('measure-edges', "Magnetization profile and edge correlation length.")):
        p = sub.add_parser(name, parents=[common], help=text)
        source = p.add_mutually_exclusive_group(required=True)
        source.add_argument('--state', help="MPS JSON measured exactly.")
        source.add_argument('--circuit', help="Circuit JSON; measured on the configured source.")
        if name == 'measure-string-order':
            p.add_argument('--parity', choices=['even', 'odd', 'both'], default='both')
        elif name == 'measure-spectrum':
            p.add_argument('--l', type=int, default=None, help="Largest segment length.")
            p.add_argument('--cut', choices=['j0', 'j1'], default='j0')
            p.add_argument('--bootstrap', type=int, default=None, help="Bootstrap samples.")
        else:
            p.add_argument('--cells', type=int, default=None, help="Two-site cells in the edge fit.")

    p = sub.add_parser('zne-validate', parents=[common], help="Identity-circuit validation of the noise model.")
    skeleton = p.add_mutually_exclusive_group(required=True)
    skeleton.add_argument('--skeleton', help="Circuit JSON whose gate layout is validated.")
    skeleton.add_argument('--layers', type=float, help="Validate a fresh brickwork skeleton of this depth.")

    p = sub.add_parser('export-qasm', parents=[common], help="Write a circuit JSON as OpenQASM 3.")
    p.add_argument('--circuit', required=True)
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = ConfigManager(args.config).get_config() if args.config else PipelineConfig()
    overrides = {}
    if args.model:
        overrides['model'] = read_json(args.model)
    if args.noise:
        overrides['measurement'] = {'noise': NoiseModel.from_dict(read_json(args.noise)).to_dict()}
    if args.output:
        overrides['output_dir'] = args.output
    if args.seed is not None:
        overrides['seed'] = args.seed
    if getattr(args, 'phase_points', None):
        overrides['phase_points'] = args.phase_points
    cfg.update_from_dict(overrides)
    return cfg


def _provider(args: argparse.Namespace, cfg: PipelineConfig, seed: np.random.SeedSequence):
    if args.state:
        return ExactProvider(load_mps(args.state))
    circuit, full = load_circuit(args.circuit)
    if cfg.measurement.source == 'noisy':
        return noisy_provider(cfg, circuit, full, seed)
    return ExactProvider(simulate(circuit, full))


def _write_report(report: MeasurementReport, out: Path) -> None:
    for path in write_measurement_tables(report, out):
        logger.info(f"Wrote {path}")


def cmd_run(args, cfg: PipelineConfig) -> None:
    manifest = run_pipeline(cfg, record_timing=args.timing)
    if 'energies' in manifest:
        for name, energy in manifest['energies'].items():
            logger.info(f"{name}: E = {energy:.6f}")
    else:
        logger.info(f"{len(manifest['stages'])} stages completed")


def cmd_dmrg(args, cfg: PipelineConfig, out: Path) -> None:
    result, _ = ground_state_stage(cfg)
    save_mps(artifact_path(str(out), 'ground_state.json'), result.state)
    write_json(artifact_path(str(out), 'summary.json'), result.summary(cfg.model))


def cmd_compress(args, cfg: PipelineConfig, out: Path) -> None:
    if args.chi is not None:
        cfg.update_from_dict({'compression': {'chi': args.chi}})
    state = load_mps(args.state)
    hamiltonian = build_hamiltonian_mpo(cfg.model) if cfg.model.n_sites == state.n_sites else None
    result = compress_stage(state, cfg.compression, hamiltonian)
    save_mps(artifact_path(str(out), 'compressed.json'), result.state)
    write_json(artifact_path(str(out), 'summary.json'), result.summary())


def cmd_compile(args, cfg: PipelineConfig, out: Path) -> None:
    target = load_mps(args.target)
    if cfg.model.n_sites != target.n_sites:
        logger.warning(f"model has {cfg.model.n_sites} sites, target {target.n_sites}; using the target's length")
        cfg.model = CouplingPattern(cfg.model.j0, cfg.model.j1, target.n_sites)
    if args.layers:
        cfg.update_from_dict({'campaign': {'layers': args.layers}})
    uncompressed = load_mps(args.uncompressed) if args.uncompressed else None
    report = compile_stage(cfg, target, uncompressed, build_hamiltonian_mpo(cfg.model))
    save_circuit(artifact_path(str(out), 'circuit.json'), report.circuit, report.full_params)
    write_text(artifact_path(str(out), 'circuit.qasm'), export_qasm(report.circuit, report.full_params))
    write_json(artifact_path(str(out), 'aqc_result.json'), report.best.to_dict())
    write_json(artifact_path(str(out), 'campaign.json'), report.to_dict())


def cmd_measure(args, cfg: PipelineConfig, out: Path) -> None:
    seq = np.random.SeedSequence(cfg.seed)
    provider = _provider(args, cfg, seq.spawn(1)[0])
    report = MeasurementReport(cfg.measurement.source if args.circuit else 'ground_state')
    if args.command == 'measure-string-order':
        parities = ('even', 'odd') if args.parity == 'both' else (args.parity,)
        report.string_order = measure_string_order(provider, cfg.measurement, parities)
    elif args.command == 'measure-spectrum':
        max_l = args.l if args.l is not None else cfg.measurement.tomography_max_l
        samples = args.bootstrap if args.bootstrap is not None else cfg.measurement.bootstrap_samples
        report.spectra[args.cut] = measure_spectrum(provider, max_l, args.cut, samples, seq.spawn(1)[0])
    else:
        cells = args.cells if args.cells is not None else cfg.measurement.edge_cells
        report.magnetization, report.edge_fit = measure_edges(provider, cells)
    fits = getattr(provider, 'fits', {})
    if fits:
        report.zne_fits = {pauli_name(p): fit for p, fit in fits.items()}
    _write_report(report, out)


def cmd_zne_validate(args, cfg: PipelineConfig, out: Path) -> None:
    if args.skeleton:
        circuit, _ = load_circuit(args.skeleton)
    else:
        circuit = build_brickwork(cfg.model.n_sites, args.layers)
    result = validate_skeleton(cfg, circuit)
    write_json(artifact_path(str(out), 'validation.json'), result)
    logger.info(f"flagged qubits: {result['flagged']}")


def cmd_export_qasm(args, cfg: PipelineConfig, out: Path) -> None:
    circuit, full = load_circuit(args.circuit)
    write_text(artifact_path(str(out), Path(args.circuit).with_suffix('.qasm').name), export_qasm(circuit, full))


COMMANDS = {
    'dmrg': cmd_dmrg,
    'compress': cmd_compress,
    'compile': cmd_compile,
    'measure-string-order': cmd_measure,
    'measure-spectrum': cmd_measure,
    'measure-edges': cmd_measure,
    'zne-validate': cmd_zne_validate,
    'export-qasm': cmd_export_qasm,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_verbose(args.verbose)
    try:
        cfg = load_config(args)
        if args.command == 'run':
            cmd_run(args, cfg)
        else:
            out = Path(cfg.output_dir) / args.command
            out.mkdir(parents=True, exist_ok=True)
            COMMANDS[args.command](args, cfg, out)
    except Exception as e:
        logger.critical(f"Fatal error in {args.command}: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
