"""
Tolerances, defaults and the error hierarchy
Shared by every pykannan module
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np


TOOL_VERSION = "0.1.0"


class KannanError(Exception):
    """Base class for all pykannan errors"""


class StructuralError(KannanError):
    """Malformed input: shapes, indices, empty sets"""


class ParameterError(KannanError):
    """A numeric parameter is outside its admissible range"""


class GenerationError(KannanError):
    """Instance generation gave up after bounded retries"""


@dataclass(frozen=True)
class Settings:
    """Scale-aware tolerances and run defaults"""

    metric_rel_tol: float = 1e-9
    cert_rel_tol: float = 1e-12
    grid_points: int = 101
    generator_retries: int = 10

    def metric_tolerance(self, dist, tol: Optional[float] = None) -> float:
        """τ_metric: relative to the largest matrix entry unless overridden"""
        if tol is not None:
            return float(tol)
        arr = np.asarray(dist, dtype=float)
        if arr.size == 0:
            return 0.0
        return self.metric_rel_tol * float(np.max(np.abs(arr)))

    def cert_tolerance(self, dist, tol: Optional[float] = None) -> float:
        """τ_cert: relative to 1 + the largest distance unless overridden"""
        if tol is not None:
            return float(tol)
        arr = np.asarray(dist, dtype=float)
        largest = float(np.max(arr)) if arr.size else 0.0
        return self.cert_rel_tol * (1.0 + largest)


DEFAULT_SETTINGS = Settings()
