"""
Configuration management for the toolkit pipeline.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.aqc import AqcConfig
from core.dmrg import DmrgConfig
from core.exceptions import ConfigError
from core.lattice import CouplingPattern, named_phase_points
from core.noisy_sampler import DEFAULT_NOISE_FACTORS, ZNE_MODELS, NoiseModel
from .logger import get_logger

logger = get_logger(__name__)

SCHEMA_VERSION = 1

# Preset expanding to the four reference points of the phase diagram.
TABLE1_PRESET = 'table1'


def resolve_phase_points(names: Optional[List[str]]) -> Optional[List[str]]:
    """Expand presets and check every name against the known phase points."""
    if names is None:
        return None
    if isinstance(names, str):
        names = [names]
    known = named_phase_points()
    resolved: List[str] = []
    for name in names:
        expanded = list(known) if name == TABLE1_PRESET else [name]
        for point in expanded:
            if point not in known:
                raise ConfigError('phase_points', f"unknown phase point {point!r}, expected one of "
                                                  f"{sorted(known)} or {TABLE1_PRESET!r}")
            if point not in resolved:
                resolved.append(point)
    if not resolved:
        raise ConfigError('phase_points', "at least one phase point is required")
    return resolved


def _reject_unknown(section: str, data: Dict[str, Any], known) -> None:
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{section}.{sorted(unknown)[0]}", "unknown key")


@dataclass
class CompressionConfig:
    """Compression settings; ``chi`` None searches the smallest chi reaching the floor."""

    fidelity_floor: float = 0.999
    chi: Optional[int] = None
    max_chi: int = 64
    sweeps: int = 10

    def __post_init__(self) -> None:
        if not 0.0 < self.fidelity_floor <= 1.0:
            raise ConfigError('compression.fidelity_floor', f"must lie in (0, 1], got {self.fidelity_floor}")
        if self.chi is not None and self.chi < 1:
            raise ConfigError('compression.chi', f"must be positive, got {self.chi}")
        if self.max_chi < 1:
            logger.warning(f"Invalid max_chi {self.max_chi}, using default 64")
            self.max_chi = 64
        if self.sweeps < 1:
            logger.warning(f"Invalid sweeps {self.sweeps}, using default 10")
            self.sweeps = 10

    def to_dict(self) -> Dict[str, Any]:
        return {'fidelity_floor': self.fidelity_floor, 'chi': self.chi, 'max_chi': self.max_chi, 'sweeps': self.sweeps}


@dataclass
class CampaignConfig:
    layers: List[float] = field(default_factory=lambda: [3.0])
    runs_per_layer: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.layers:
            raise ConfigError('campaign.layers', "at least one layer count is required")
        for l in self.layers:
            if l <= 0 or abs(2 * l - round(2 * l)) > 1e-9:
                raise ConfigError('campaign.layers', f"layer counts must be positive multiples of 1/2, got {l}")
        self.layers = [float(l) for l in self.layers]
        if self.runs_per_layer < 1:
            logger.warning(f"Invalid runs_per_layer {self.runs_per_layer}, using default 1")
            self.runs_per_layer = 1
        if self.workers < 1:
            logger.warning(f"Invalid workers {self.workers}, using default 1")
            self.workers = 1

    def to_dict(self) -> Dict[str, Any]:
        return {'layers': list(self.layers), 'runs_per_layer': self.runs_per_layer, 'workers': self.workers}


@dataclass
class ZneSettings:
    factors: List[float] = field(default_factory=lambda: list(DEFAULT_NOISE_FACTORS))
    models: List[str] = field(default_factory=lambda: list(ZNE_MODELS))
    magnetization_models: List[str] = field(default_factory=lambda: ['linear'])
    shots: Optional[int] = 10000
    twirls: int = 100
    enabled: bool = True

    def __post_init__(self) -> None:
        if len(self.factors) < 3 or min(self.factors) < 1.0:
            raise ConfigError('measurement.zne.factors', "need at least 3 noise factors, all >= 1")
        for name in ('models', 'magnetization_models'):
            bad = set(getattr(self, name)) - set(ZNE_MODELS)
            if bad or not getattr(self, name):
                raise ConfigError(f"measurement.zne.{name}", f"models must be drawn from {ZNE_MODELS}")
        if self.shots is not None and self.shots < 1:
            logger.warning(f"Invalid shots {self.shots}, using default 10000")
            self.shots = 10000
        if self.twirls < 1:
            logger.warning(f"Invalid twirls {self.twirls}, using default 100")
            self.twirls = 100

    def to_dict(self) -> Dict[str, Any]:
        return {'factors': list(self.factors), 'models': list(self.models),
                'magnetization_models': list(self.magnetization_models), 'shots': self.shots, 'twirls': self.twirls,
                'enabled': self.enabled}


@dataclass
class MeasurementConfig:
    """Observable settings; windows left as None are fitted to the chain length."""

    source: str = 'compiled'
    string_lengths: Optional[List[int]] = None
    start_sites: Optional[Dict[str, List[int]]] = None
    edge_margin: Optional[int] = None
    tomography_max_l: int = 6
    bootstrap_samples: int = 1000
    edge_cells: int = 10
    noise: Optional[NoiseModel] = None
    zne: ZneSettings = field(default_factory=ZneSettings)

    def __post_init__(self) -> None:
        if isinstance(self.noise, dict):
            self.noise = NoiseModel.from_dict(self.noise)
        if isinstance(self.zne, dict):
            _reject_unknown('measurement.zne', self.zne, ZneSettings.__dataclass_fields__)
            self.zne = ZneSettings(**self.zne)
        if self.source not in ('ground_state', 'compiled', 'noisy'):
            raise ConfigError('measurement.source', f"must be ground_state, compiled or noisy, got {self.source!r}")
        if self.source == 'noisy' and self.noise is None:
            raise ConfigError('measurement.noise', "a noise model is required for the noisy source")
        if not 1 <= self.tomography_max_l <= 6:
            logger.warning(f"Invalid tomography_max_l {self.tomography_max_l}, using default 6")
            self.tomography_max_l = 6
        if self.bootstrap_samples < 1:
            logger.warning(f"Invalid bootstrap_samples {self.bootstrap_samples}, using default 1000")
            self.bootstrap_samples = 1000

    def to_dict(self) -> Dict[str, Any]:
        return {
            'source': self.source,
            'string_lengths': self.string_lengths,
            'start_sites': self.start_sites,
            'edge_margin': self.edge_margin,
            'tomography_max_l': self.tomography_max_l,
            'bootstrap_samples': self.bootstrap_samples,
            'edge_cells': self.edge_cells,
            'noise': self.noise.to_dict() if self.noise else None,
            'zne': self.zne.to_dict(),
        }


_SECTIONS = ('schema_version', 'model', 'dmrg', 'compression', 'aqc', 'campaign', 'measurement', 'phase_points',
             'output_dir', 'seed')


@dataclass
class PipelineConfig:
    """Configuration of one end-to-end run.

    When ``phase_points`` is set, the couplings of ``model`` are replaced by
    those of each named point (keeping ``model.n_sites``) and every point
    runs as its own pipeline.
    """

    model: CouplingPattern = field(default_factory=lambda: CouplingPattern(1.0, 0.5, 20))
    dmrg: DmrgConfig = field(default_factory=DmrgConfig)
    compression: CompressionConfig = field(default_factory=CompressionConfig)
    aqc: AqcConfig = field(default_factory=AqcConfig)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    phase_points: Optional[List[str]] = None
    output_dir: str = "results"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ConfigError('seed', f"must be non-negative, got {self.seed}")
        self.phase_points = resolve_phase_points(self.phase_points)

    def ensure_directories(self) -> None:
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)
        logger.info(f"Ensured directory exists: {self.output_dir}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'model': self.model.to_dict(),
            'dmrg': self.dmrg.to_dict(),
            'compression': self.compression.to_dict(),
            'aqc': self.aqc.to_dict(),
            'campaign': self.campaign.to_dict(),
            'measurement': self.measurement.to_dict(),
            'phase_points': list(self.phase_points) if self.phase_points else None,
            'output_dir': self.output_dir,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PipelineConfig':
        cfg = cls()
        cfg.update_from_dict(data)
        return cfg

    def update_from_dict(self, data: Dict[str, Any]) -> None:
        """Merge a (possibly partial) config document; every section is validated on the way in."""
        _reject_unknown('config', data, _SECTIONS)
        version = data.get('schema_version', SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError('schema_version', f"unsupported version {version}, expected {SCHEMA_VERSION}")
        if 'model' in data:
            merged = {**self.model.to_dict(), **data['model']}
            self.model = CouplingPattern.from_dict(merged)
        if 'dmrg' in data:
            self.dmrg = DmrgConfig.from_dict({**self.dmrg.to_dict(), **data['dmrg']})
        for name, kind in (('compression', CompressionConfig), ('campaign', CampaignConfig),
                           ('measurement', MeasurementConfig)):
            if name in data:
                _reject_unknown(name, data[name], kind.__dataclass_fields__)
                setattr(self, name, kind(**{**getattr(self, name).to_dict(), **data[name]}))
        if 'aqc' in data:
            self.aqc = AqcConfig.from_dict({**self.aqc.to_dict(), **data['aqc']})
        if 'phase_points' in data:
            self.phase_points = resolve_phase_points(data['phase_points'])
        if 'output_dir' in data:
            self.output_dir = str(data['output_dir'])
        if 'seed' in data:
            self.seed = int(data['seed'])
            if self.seed < 0:
                raise ConfigError('seed', f"must be non-negative, got {self.seed}")
        for key in data:
            logger.debug(f"Updated config section: {key}")


class ConfigManager:
    """Loads and saves a pipeline config file."""

    def __init__(self, config_file: str = "config/pipeline.json") -> None:
        self.config_file = Path(config_file)
        self.config = PipelineConfig()
        self._load_config()

    def _load_config(self) -> None:
        if self.config_file.exists():
            try:
                with open(self.config_file, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"Failed to load configuration: {e}")
                raise ConfigError(str(self.config_file), f"unreadable config: {e}") from e
            self.config.update_from_dict(data)
            logger.info(f"Loaded configuration from {self.config_file}")
        else:
            logger.info("No configuration file found, using defaults")
            self.save_config()

    def save_config(self) -> None:
        try:
            self.config_file.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(self.config.to_dict(), f, indent=2, ensure_ascii=False)
            logger.info(f"Saved configuration to {self.config_file}")
        except OSError as e:
            logger.error(f"Failed to save configuration: {e}")

    def get_config(self) -> PipelineConfig:
        return self.config

    def update_config(self, **kwargs) -> None:
        self.config.update_from_dict(kwargs)
        self.save_config()
