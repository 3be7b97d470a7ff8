"""
Seeded Instance Generator
Random finite metric spaces, cyclic representations and maps, and the separation search

Randomness comes from numpy's Philox4x64 counter-based generator keyed by
(seed, stream); floats are drawn with numpy's 53-bit mantissa procedure, so a
given (seed, stream) yields the same instance on every platform.
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.certify import (
    Certificate, certify_cyclic_kannan, certify_cyclic_kannan_pata, certify_kannan,
    certify_ratio, kannan_to_pata, reduction_lambda,
)
from core.conditions import EpsilonGrid, LipschitzCondition, PataParams
from core.cyclic import CyclicRepresentation, SelfMap, require_cyclic, wrap_index
from core.metric_space import AnchoredSpace, FiniteMetricSpace, MetricError, shortest_path_repair
from core.settings import DEFAULT_SETTINGS, GenerationError, ParameterError


logger = logging.getLogger(__name__)

_KEY_MASK = (1 << 64) - 1


class GenMethod(Enum):
    """How distances are sampled"""
    EUCLIDEAN_EMBED = "euclidean_embed"
    RANDOM_REPAIR = "random_repair"


class MapMode(Enum):
    """How the self-map is sampled"""
    UNIFORM = "uniform"
    SINK = "sink"


@dataclass(frozen=True)
class GenConfig:
    """Generator settings; one config plus a stream number pins down an instance"""

    n_points: int = 5
    m_sets: int = 2
    method: GenMethod = GenMethod.EUCLIDEAN_EMBED
    embed_dim: int = 2
    seed: int = 0
    overlap_fraction: float = 0.25
    map_mode: MapMode = MapMode.UNIFORM
    sink_probability: float = 0.0

    def __post_init__(self):
        if not (self.n_points >= self.m_sets >= 1):
            raise ParameterError(
                f"Need n_points >= m_sets >= 1, got n={self.n_points}, m={self.m_sets}"
            )
        if self.embed_dim < 1:
            raise ParameterError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if not (0.0 <= self.overlap_fraction <= 1.0):
            raise ParameterError(f"overlap_fraction must lie in [0, 1], got {self.overlap_fraction}")
        if not (0.0 <= self.sink_probability <= 1.0):
            raise ParameterError(f"sink_probability must lie in [0, 1], got {self.sink_probability}")
        if not (0 <= self.seed <= _KEY_MASK):
            raise ParameterError(f"seed must be a 64-bit unsigned value, got {self.seed}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["method"] = self.method.value
        data["map_mode"] = self.map_mode.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GenConfig":
        values = dict(data)
        if "method" in values:
            values["method"] = GenMethod(values["method"])
        if "map_mode" in values:
            values["map_mode"] = MapMode(values["map_mode"])
        return cls(**values)


@dataclass(frozen=True)
class CyclicInstance:
    """A generated space together with a valid cyclic representation and map"""

    space: FiniteMetricSpace
    rep: CyclicRepresentation
    self_map: SelfMap
    stream: int = 0


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox4x64 keyed by the 128-bit value (stream, seed)"""
    key = ((stream & _KEY_MASK) << 64) | (seed & _KEY_MASK)
    return np.random.Generator(np.random.Philox(key=key))


def _labels(n: int) -> List[str]:
    return [f"p{i}" for i in range(n)]


def _sample_matrix(cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.n_points
    if cfg.method == GenMethod.EUCLIDEAN_EMBED:
        points = rng.random((n, cfg.embed_dim))
        diff = points[:, None, :] - points[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))
    raw = rng.uniform(0.05, 1.0, size=(n, n))
    upper = np.triu(raw, k=1)
    return shortest_path_repair(upper + upper.T)


def random_finite_space(cfg: GenConfig, rng: Optional[np.random.Generator] = None) -> FiniteMetricSpace:
    """Sample a metric space; coincident samples are redrawn a bounded number of times"""
    rng = rng if rng is not None else make_rng(cfg.seed)
    if cfg.n_points == 1:
        return FiniteMetricSpace(_labels(1), [[0.0]])

    for attempt in range(1, DEFAULT_SETTINGS.generator_retries + 1):
        dist = _sample_matrix(cfg, rng)
        try:
            return FiniteMetricSpace(_labels(cfg.n_points), dist)
        except MetricError as e:
            logger.debug("random_finite_space: attempt %d rejected (%s)", attempt, e)
    raise GenerationError(
        f"No valid {cfg.n_points}-point space after {DEFAULT_SETTINGS.generator_retries} attempts"
    )


def _close_memberships(sets: List[set], image: List[int]) -> None:
    """Grow sets until x ∈ A_i implies T(x) ∈ A_{i+1} for every membership"""
    m = len(sets)
    changed = True
    while changed:
        changed = False
        for i in range(1, m + 1):
            successor = sets[wrap_index(i + 1, m) - 1]
            for x in sorted(sets[i - 1]):
                if image[x] not in successor:
                    successor.add(image[x])
                    changed = True


def random_cyclic_instance(cfg: GenConfig, rng: Optional[np.random.Generator] = None,
                           stream: int = 0) -> CyclicInstance:
    """Sample a space, a cover A_1..A_m and a map with T(A_i) ⊂ A_{i+1}"""
    rng = rng if rng is not None else make_rng(cfg.seed, stream)
    space = random_finite_space(cfg, rng)
    n, m = cfg.n_points, cfg.m_sets

    # home sets: the first m shuffled points seed one set each
    order = rng.permutation(n)
    home = np.empty(n, dtype=np.intp)
    home[order[:m]] = np.arange(1, m + 1)
    if n > m:
        home[order[m:]] = rng.integers(1, m + 1, size=n - m)
    sets = [set() for _ in range(m)]
    for x in range(n):
        sets[home[x] - 1].add(x)

    if m > 1 and cfg.overlap_fraction > 0:
        extra = rng.random((n, m)) < cfg.overlap_fraction / 2.0
        for x, i in np.argwhere(extra):
            sets[i].add(int(x))

    sink = None
    if cfg.map_mode == MapMode.SINK or rng.random() < cfg.overlap_fraction:
        sink = int(rng.integers(0, n))
        for s in sets:
            s.add(sink)

    image = []
    for x in range(n):
        successor = sorted(sets[wrap_index(int(home[x]) + 1, m) - 1])
        if cfg.map_mode == MapMode.SINK and (x == sink or rng.random() < cfg.sink_probability):
            image.append(sink)
        else:
            image.append(int(successor[rng.integers(0, len(successor))]))

    _close_memberships(sets, image)
    rep = CyclicRepresentation(sets)
    self_map = SelfMap(image)
    require_cyclic(rep, self_map)
    return CyclicInstance(space, rep, self_map, stream)


def certify_banach(space: FiniteMetricSpace, self_map: SelfMap) -> Certificate:
    """Banach contraction check; lambda_min carries L = max over x≠y of d(Tx,Ty)/d(x,y)"""
    pairs = [(x, y, 1) for x in range(space.size) for y in range(space.size) if x != y]
    return certify_ratio(LipschitzCondition(), AnchoredSpace(space, 0), self_map, pairs)


@dataclass
class Classification:
    """Which certificates hold for one instance"""

    kannan: Certificate
    cyclic_kannan: Certificate
    banach: Certificate
    cyclic_kannan_pata: Optional[Certificate] = None
    reduction_params: Optional[PataParams] = None

    @property
    def label(self) -> str:
        if self.kannan.holds and self.banach.holds:
            return "kannan_and_banach"
        if self.kannan.holds:
            return "kannan_only"
        if self.banach.holds:
            return "banach_only"
        return "neither"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class": self.label,
            "kannan": self.kannan.to_dict(),
            "cyclic_kannan": self.cyclic_kannan.to_dict(),
            "banach": self.banach.to_dict(),
            "cyclic_kannan_pata": (
                self.cyclic_kannan_pata.to_dict() if self.cyclic_kannan_pata else None
            ),
        }


def classify_instance(instance: CyclicInstance, grid: Optional[EpsilonGrid] = None) -> Classification:
    """Run every certifier the separation search compares"""
    space, rep, self_map = instance.space, instance.rep, instance.self_map
    result = Classification(
        kannan=certify_kannan(space, self_map),
        cyclic_kannan=certify_cyclic_kannan(space, self_map, rep),
        banach=certify_banach(space, self_map),
    )
    if result.cyclic_kannan.holds:
        params = kannan_to_pata(reduction_lambda(result.cyclic_kannan.lambda_min))
        result.reduction_params = params
        result.cyclic_kannan_pata = certify_cyclic_kannan_pata(
            AnchoredSpace(space, 0), self_map, rep, params, grid
        )
    return result


SEPARATING_CLASSES = ("kannan_only", "banach_only")


@dataclass
class SeparationResult:
    """Class counts over a search budget plus the separating instances found"""

    budget: int
    class_counts: Dict[str, int] = field(default_factory=dict)
    holds_counts: Dict[str, int] = field(default_factory=dict)
    separating: List[Tuple[CyclicInstance, Classification]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "budget": self.budget,
            "class_counts": dict(self.class_counts),
            "holds_counts": dict(self.holds_counts),
            "separating": [
                {"stream": inst.stream, "class": cls.label} for inst, cls in self.separating
            ],
        }


def search_separating_instances(cfg: GenConfig, budget: int,
                                grid: Optional[EpsilonGrid] = None) -> SeparationResult:
    """Generate budget instances and keep those separating Kannan from Banach"""
    if budget < 1:
        raise ParameterError(f"budget must be >= 1, got {budget}")
    result = SeparationResult(
        budget=budget,
        class_counts={"kannan_and_banach": 0, "kannan_only": 0, "banach_only": 0, "neither": 0},
        holds_counts={"kannan": 0, "cyclic_kannan": 0, "banach": 0, "cyclic_kannan_pata": 0},
    )
    for stream in range(budget):
        instance = random_cyclic_instance(cfg, stream=stream)
        cls = classify_instance(instance, grid)
        result.class_counts[cls.label] += 1
        result.holds_counts["kannan"] += cls.kannan.holds
        result.holds_counts["cyclic_kannan"] += cls.cyclic_kannan.holds
        result.holds_counts["banach"] += cls.banach.holds
        if cls.cyclic_kannan_pata is not None:
            result.holds_counts["cyclic_kannan_pata"] += cls.cyclic_kannan_pata.holds
        if cls.label in SEPARATING_CLASSES:
            result.separating.append((instance, cls))
    logger.info("separation search (seed=%d, budget=%d): %s",
                cfg.seed, budget, result.class_counts)
    return result
