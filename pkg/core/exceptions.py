"""
Exception hierarchy shared by the engine modules.
"""

from typing import Any, Dict, List, Optional

import numpy as np


class SptToolkitError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(SptToolkitError, ValueError):
    """Tensor extents or chain lengths do not line up."""


class NumericalError(SptToolkitError, RuntimeError):
    """A dense linear-algebra kernel failed to converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SectorViolationError(SptToolkitError):
    """A charge-conserving sweep left its total-Z sector."""


class NonUnitaryGateError(SptToolkitError, ValueError):
    """A two-qubit gate failed the unitarity check."""


class FitError(SptToolkitError):
    """No model could be fitted to the supplied data."""


class CalibrationError(SptToolkitError):
    """Readout calibration produced a non-invertible attenuation factor."""


class OptimizationDivergedError(SptToolkitError):
    """The compilation cost became non-finite."""

    def __init__(self, message: str, params: np.ndarray, iteration: int) -> None:
        super().__init__(message)
        self.params = np.array(params, copy=True)
        self.iteration = iteration


class ConfigError(SptToolkitError, ValueError):
    """A configuration document is malformed; `field` names the culprit."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class StageError(SptToolkitError):
    """A pipeline stage aborted; the manifest holds the completed stages."""

    def __init__(
        self, stage: str, message: str, completed: Optional[List[str]] = None, manifest: Optional[Dict[str, Any]] = None
    ) -> None:
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
        self.completed = list(completed or [])
        self.manifest = manifest
