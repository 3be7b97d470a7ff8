"""
Finite Metric Space Implementation
Validated distance matrices, metric repair and anchored norms
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.settings import DEFAULT_SETTINGS, StructuralError


logger = logging.getLogger(__name__)

# Report order of violation kinds
VIOLATION_KINDS = ("diag", "negative", "asym", "coincident", "triangle")


@dataclass(frozen=True)
class Violation:
    """A single metric-axiom violation"""

    kind: str
    indices: Tuple[int, ...]
    magnitude: float

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "indices": list(self.indices), "magnitude": self.magnitude}


@dataclass(frozen=True)
class ValidationReport:
    """Every axiom violation above τ_metric; empty means the matrix is a metric"""

    violations: Tuple[Violation, ...] = ()
    tolerance: float = 0.0

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def of_kind(self, kind: str) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.is_valid,
            "tolerance": self.tolerance,
            "violations": [v.to_dict() for v in self.violations],
        }


class MetricError(StructuralError):
    """Distance matrix is not a metric"""

    def __init__(self, report: ValidationReport):
        self.report = report
        kinds = sorted({v.kind for v in report.violations})
        super().__init__(
            f"Distance matrix violates the metric axioms "
            f"({len(report.violations)} violations: {', '.join(kinds)})"
        )


def _as_square_matrix(dist) -> np.ndarray:
    """Coerce to a finite float64 square matrix or raise StructuralError"""
    try:
        arr = np.array(dist, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise StructuralError(f"Distance matrix is not numeric: {e}")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructuralError(f"Distance matrix must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError("Distance matrix contains non-finite entries")
    return arr


def validate_metric(dist, tau_metric: Optional[float] = None) -> ValidationReport:
    """Check all metric axioms and return every violation exceeding τ_metric"""
    d = _as_square_matrix(dist)
    tau = DEFAULT_SETTINGS.metric_tolerance(d, tau_metric)
    n = d.shape[0]
    found: List[Violation] = []

    for i in np.flatnonzero(np.abs(np.diag(d)) > tau):
        found.append(Violation("diag", (int(i),), float(abs(d[i, i]))))

    for i, j in np.argwhere(d < -tau):
        found.append(Violation("negative", (int(i), int(j)), float(-d[i, j])))

    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    asym = np.abs(d - d.T)
    for i, j in np.argwhere(upper & (asym > tau)):
        found.append(Violation("asym", (int(i), int(j)), float(asym[i, j])))

    for i, j in np.argwhere(upper & (d <= tau) & (d >= -tau)):
        found.append(Violation("coincident", (int(i), int(j)), float(abs(d[i, j]))))

    # excess[i, j, k] = d(i, j) - d(i, k) - d(k, j)
    excess = d[:, :, None] - (d[:, None, :] + d.T[None, :, :])
    for i, j, k in np.argwhere(excess > tau):
        found.append(Violation("triangle", (int(i), int(j), int(k)), float(excess[i, j, k])))

    found.sort(key=lambda v: (VIOLATION_KINDS.index(v.kind), v.indices))
    if found:
        logger.debug("validate_metric: %d violations on %d points", len(found), n)
    return ValidationReport(tuple(found), tau)


def shortest_path_repair(dist) -> np.ndarray:
    """Turn a symmetric positive matrix into a metric by all-pairs shortest paths"""
    d = _as_square_matrix(dist)
    if not np.array_equal(d, d.T):
        raise StructuralError("shortest_path_repair needs a symmetric matrix")
    if np.any(d < 0):
        raise StructuralError("shortest_path_repair needs non-negative entries")
    if np.any(np.diag(d) != 0):
        raise StructuralError("shortest_path_repair needs a zero diagonal")
    n = d.shape[0]
    if n > 1 and np.any(d[~np.eye(n, dtype=bool)] <= 0):
        raise StructuralError("shortest_path_repair needs positive off-diagonal entries")

    # Repeat Floyd-Warshall sweeps until nothing relaxes, so the result is a
    # floating-point fixed point: exact triangle inequality and idempotence.
    sweeps = 0
    while True:
        relaxed = d.copy()
        for k in range(n):
            relaxed = np.minimum(relaxed, relaxed[:, k:k + 1] + relaxed[k:k + 1, :])
        sweeps += 1
        if np.array_equal(relaxed, d):
            break
        d = relaxed
    logger.debug("shortest_path_repair: %d sweeps on %d points", sweeps, n)
    return d


class FiniteMetricSpace:
    """Labelled points with a validated, read-only distance matrix"""

    def __init__(self, labels: Sequence[str], dist, tau_metric: Optional[float] = None):
        d = _as_square_matrix(dist)
        if len(labels) != d.shape[0]:
            raise StructuralError(
                f"Got {len(labels)} labels for a {d.shape[0]}x{d.shape[0]} distance matrix"
            )
        if d.shape[0] == 0:
            raise StructuralError("A metric space needs at least one point")
        report = validate_metric(d, tau_metric)
        if not report.is_valid:
            raise MetricError(report)
        d.setflags(write=False)
        self._labels = tuple(str(label) for label in labels)
        self._dist = d

    @classmethod
    def from_matrix(cls, dist, tau_metric: Optional[float] = None) -> "FiniteMetricSpace":
        """Build a space with default labels p0, p1, ..."""
        n = len(dist)
        return cls([f"p{i}" for i in range(n)], dist, tau_metric)

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    @property
    def dist(self) -> np.ndarray:
        return self._dist

    @property
    def size(self) -> int:
        return len(self._labels)

    def __len__(self) -> int:
        return self.size

    def d(self, i: int, j: int) -> float:
        """Distance between points i and j"""
        self.check_index(i)
        self.check_index(j)
        return float(self._dist[i, j])

    def check_index(self, i: int):
        """Validate a point index"""
        if not (0 <= i < self.size):
            raise StructuralError(f"Invalid point index: {i} (space has {self.size} points)")

    def max_distance(self) -> float:
        return float(np.max(self._dist))

    def __repr__(self) -> str:
        return f"FiniteMetricSpace(n={self.size})"


@dataclass(frozen=True)
class AnchoredSpace:
    """A metric space with a chosen "zero" point defining ‖x‖ = d(x, anchor)"""

    space: FiniteMetricSpace
    anchor: int = 0
    norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.space.check_index(self.anchor)
        norms = self.space.dist[:, self.anchor].copy()
        norms.setflags(write=False)
        object.__setattr__(self, "norms", norms)

    def norm(self, x: int) -> float:
        self.space.check_index(x)
        return float(self.norms[x])

    def reanchored(self, anchor: int) -> "AnchoredSpace":
        return AnchoredSpace(self.space, anchor)


def norm(anchored: AnchoredSpace, x: int) -> float:
    """‖x‖ = d(x, x₁) for the anchor x₁"""
    return anchored.norm(x)
