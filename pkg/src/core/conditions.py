"""
Contractive Condition Definitions
Parameters, ε-grids and the lhs/rhs evaluation of every checked inequality
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from core.cyclic import SelfMap
from core.metric_space import AnchoredSpace, FiniteMetricSpace
from core.settings import ParameterError


class ConditionType(Enum):
    """Inequality families that can be certified"""
    KANNAN = "kannan"                   # d(Tx,Ty) <= λ/2 [d(x,Tx) + d(y,Ty)], all pairs
    CYCLIC_KANNAN = "cyclic-kannan"     # same, consecutive pairs only
    CYCLIC_KANNAN_PATA = "ck-pata"      # ε-family, consecutive pairs
    KANNAN_PATA = "cs"                  # ε-family, all pairs
    PATA = "pata"                       # ε-family with (1-ε) d(x,y) base
    BANACH = "banach"                   # d(Tx,Ty) <= L d(x,y)

    @property
    def is_ratio_type(self) -> bool:
        """Conditions certified through a single constant (lambda_min)"""
        return self in (ConditionType.KANNAN, ConditionType.CYCLIC_KANNAN, ConditionType.BANACH)

    @property
    def needs_partition(self) -> bool:
        return self in (ConditionType.CYCLIC_KANNAN, ConditionType.CYCLIC_KANNAN_PATA)

    @property
    def needs_params(self) -> bool:
        return self in (
            ConditionType.CYCLIC_KANNAN_PATA, ConditionType.KANNAN_PATA, ConditionType.PATA
        )


@dataclass(frozen=True)
class PsiSpec:
    """Comparison function ψ(ε) = c·ε^p"""

    kind: str = "power"
    p: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind != "power":
            raise ParameterError(f"Unsupported ψ family: {self.kind!r}")
        if not (np.isfinite(self.p) and self.p > 0):
            raise ParameterError(f"ψ exponent p must be > 0, got {self.p}")
        if not (np.isfinite(self.c) and self.c > 0):
            raise ParameterError(f"ψ scale c must be > 0, got {self.c}")

    def __call__(self, eps):
        return self.c * np.power(eps, self.p)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "p": self.p, "c": self.c}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PsiSpec":
        return cls(data.get("kind", "power"), float(data["p"]), float(data["c"]))


@dataclass(frozen=True)
class PataParams:
    """Constants Λ, α, β and comparison function ψ"""

    Lambda: float
    alpha: float = 1.0
    beta: float = 1.0
    psi: PsiSpec = PsiSpec()

    def __post_init__(self):
        if not (np.isfinite(self.Lambda) and self.Lambda >= 0):
            raise ParameterError(f"Λ must be >= 0, got {self.Lambda}")
        if not (np.isfinite(self.alpha) and self.alpha >= 1):
            raise ParameterError(f"α must be >= 1, got {self.alpha}")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ParameterError(f"β must be >= 0, got {self.beta}")

    def with_lambda(self, Lambda: float) -> "PataParams":
        return replace(self, Lambda=float(Lambda))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "Lambda": self.Lambda,
            "alpha": self.alpha,
            "beta": self.beta,
            "psi": self.psi.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PataParams":
        psi = PsiSpec.from_dict(data["psi"]) if "psi" in data else PsiSpec()
        return cls(float(data["Lambda"]), float(data["alpha"]), float(data["beta"]), psi)


@dataclass(frozen=True)
class EpsilonGrid:
    """Strictly increasing ε values in [0, 1] containing both endpoints"""

    values: Tuple[float, ...]
    points: Optional[int] = None  # set when built by uniform()

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise ParameterError(f"ε-grid needs at least 2 values, got {len(values)}")
        if values[0] != 0.0 or values[-1] != 1.0:
            raise ParameterError("ε-grid must start at 0 and end at 1")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ParameterError("ε-grid values must be strictly increasing")

    @classmethod
    def uniform(cls, points: int = 101) -> "EpsilonGrid":
        if points < 2:
            raise ParameterError(f"ε-grid needs at least 2 points, got {points}")
        return cls(tuple(np.linspace(0.0, 1.0, points).tolist()), points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> Dict[str, Any]:
        if self.points is not None:
            return {"points": self.points}
        return {"values": list(self.values)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EpsilonGrid":
        if "points" in data:
            return cls.uniform(int(data["points"]))
        return cls(tuple(data["values"]))


@dataclass(frozen=True)
class CheckTerms:
    """Evaluated checks for P pairs and E grid values: rhs = base + Λ·weight"""

    lhs: np.ndarray      # (P,)
    base: np.ndarray     # (P, E)
    weight: np.ndarray   # (P, E)

    def rhs(self, Lambda: float) -> np.ndarray:
        return self.base + Lambda * self.weight

    def slack(self, Lambda: float) -> np.ndarray:
        return self.rhs(Lambda) - self.lhs[:, None]


@dataclass(frozen=True)
class RatioTerms:
    """Evaluated checks lhs <= λ·scale for P pairs"""

    lhs: np.ndarray      # (P,)
    scale: np.ndarray    # (P,)

    def ratios(self) -> np.ndarray:
        """lhs/scale where scale > 0, 0 elsewhere"""
        out = np.zeros_like(self.lhs)
        positive = self.scale > 0
        out[positive] = self.lhs[positive] / self.scale[positive]
        return out

    def slack(self) -> np.ndarray:
        """1 - ratio; on zero scale, 1 if lhs is 0 else -lhs"""
        positive = self.scale > 0
        zero_ok = np.where(self.lhs == 0, 1.0, -self.lhs)
        return np.where(positive, 1.0 - self.ratios(), zero_ok)


class ContractiveCondition(ABC):
    """Abstract base class for a checked inequality family"""

    condition_type: ConditionType

    @abstractmethod
    def evaluate(self, anchored: AnchoredSpace, self_map: SelfMap,
                 xs: np.ndarray, ys: np.ndarray, eps: Optional[np.ndarray] = None):
        """Evaluate every (pair, ε) check for the pairs (xs[k], ys[k])"""

    def __str__(self) -> str:
        return self.condition_type.value


class KannanCondition(ContractiveCondition):
    """d(Tx,Ty) <= λ/2 [d(x,Tx) + d(y,Ty)]"""

    def __init__(self, cyclic: bool = False):
        self.condition_type = ConditionType.CYCLIC_KANNAN if cyclic else ConditionType.KANNAN

    def evaluate(self, anchored, self_map, xs, ys, eps=None) -> RatioTerms:
        d = anchored.space.dist
        image = np.asarray(self_map.image)
        tx, ty = image[xs], image[ys]
        lhs = d[tx, ty]
        # scale S/2 so that ratio = 2 d(Tx,Ty) / S
        scale = (d[xs, tx] + d[ys, ty]) / 2.0
        return RatioTerms(lhs, scale)


class LipschitzCondition(ContractiveCondition):
    """d(Tx,Ty) <= L d(x,y)"""

    condition_type = ConditionType.BANACH

    def evaluate(self, anchored, self_map, xs, ys, eps=None) -> RatioTerms:
        d = anchored.space.dist
        image = np.asarray(self_map.image)
        return RatioTerms(d[image[xs], image[ys]], d[xs, ys])


class KannanPataCondition(ContractiveCondition):
    """d(Tx,Ty) <= (1-ε)/2 [d(x,Tx)+d(y,Ty)] + Λ ε^α ψ(ε) [1+‖x‖+‖Tx‖+‖y‖+‖Ty‖]^β"""

    def __init__(self, params: PataParams, cyclic: bool = True):
        self.params = params
        self.condition_type = (
            ConditionType.CYCLIC_KANNAN_PATA if cyclic else ConditionType.KANNAN_PATA
        )

    def evaluate(self, anchored, self_map, xs, ys, eps=None) -> CheckTerms:
        d = anchored.space.dist
        norms = anchored.norms
        image = np.asarray(self_map.image)
        tx, ty = image[xs], image[ys]
        p = self.params
        lhs = d[tx, ty]
        movement = d[xs, tx] + d[ys, ty]
        bracket = 1.0 + norms[xs] + norms[tx] + norms[ys] + norms[ty]
        base = np.outer(movement, (1.0 - eps) / 2.0)
        weight = np.outer(np.power(bracket, p.beta), np.power(eps, p.alpha) * p.psi(eps))
        return CheckTerms(lhs, base, weight)


class PataCondition(ContractiveCondition):
    """d(Tx,Ty) <= (1-ε) d(x,y) + Λ ε^α ψ(ε) [1+‖x‖+‖y‖]^β, with β in [0, α]"""

    condition_type = ConditionType.PATA

    def __init__(self, params: PataParams):
        if params.beta > params.alpha:
            raise ParameterError(
                f"The Pata condition needs β in [0, α], got β={params.beta} > α={params.alpha}"
            )
        self.params = params

    def evaluate(self, anchored, self_map, xs, ys, eps=None) -> CheckTerms:
        d = anchored.space.dist
        norms = anchored.norms
        image = np.asarray(self_map.image)
        p = self.params
        lhs = d[image[xs], image[ys]]
        bracket = 1.0 + norms[xs] + norms[ys]
        base = np.outer(d[xs, ys], 1.0 - eps)
        weight = np.outer(np.power(bracket, p.beta), np.power(eps, p.alpha) * p.psi(eps))
        return CheckTerms(lhs, base, weight)
