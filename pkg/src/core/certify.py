"""
Exhaustive Certification
Checks every contractive inequality over all required pairs and an ε-grid
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.conditions import (
    CheckTerms, ConditionType, ContractiveCondition, EpsilonGrid, KannanCondition,
    KannanPataCondition, PataCondition, PataParams, PsiSpec, RatioTerms,
)
from core.cyclic import CyclicRepresentation, SelfMap, consecutive_pairs, require_cyclic
from core.metric_space import AnchoredSpace, FiniteMetricSpace
from core.settings import DEFAULT_SETTINGS, ParameterError, StructuralError


logger = logging.getLogger(__name__)

Pair = Tuple[int, int, int]


@dataclass(frozen=True)
class Witness:
    """The minimum-slack check of a failed certificate"""

    x: int
    y: int
    i: int                   # 1-based set index
    eps: Optional[float]     # None for ratio-type conditions
    lhs: float
    rhs: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x,
            "y": self.y,
            "i": self.i - 1,
            "eps": self.eps,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass(frozen=True)
class Certificate:
    """Outcome of exhaustively checking one inequality family"""

    holds: bool
    condition: ConditionType
    pairs_checked: int
    eps_checked: int
    min_slack: float
    tolerance: float
    witness: Optional[Witness] = None
    lambda_min: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "condition": self.condition.value,
            "pairs_checked": self.pairs_checked,
            "eps_checked": self.eps_checked,
            "min_slack": self.min_slack,
            "tolerance": self.tolerance,
            "witness": self.witness.to_dict() if self.witness else None,
            "lambda_min": self.lambda_min,
        }


def _pair_arrays(pairs: Sequence[Pair]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not pairs:
        empty = np.zeros(0, dtype=np.intp)
        return empty, empty, empty
    arr = np.asarray(pairs, dtype=np.intp)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def all_pairs(n: int) -> List[Pair]:
    """Every ordered pair (x, y) tagged with set index 1, lexicographic"""
    return [(x, y, 1) for x in range(n) for y in range(n)]


def _check_map(space: FiniteMetricSpace, self_map: SelfMap):
    if self_map.size != space.size:
        raise StructuralError(
            f"Map has {self_map.size} points but the space has {space.size}"
        )


def certify_ratio(condition: ContractiveCondition, anchored: AnchoredSpace,
                  self_map: SelfMap, pairs: Sequence[Pair],
                  tol: Optional[float] = None) -> Certificate:
    """Certificate for conditions carried by a single constant in (0, 1)"""
    xs, ys, idx = _pair_arrays(pairs)
    terms: RatioTerms = condition.evaluate(anchored, self_map, xs, ys)
    tol = DEFAULT_SETTINGS.cert_tolerance(anchored.space.dist, tol)
    if len(xs) == 0:
        return Certificate(True, condition.condition_type, 0, 0, 1.0, tol, None, 0.0)

    ratios = terms.ratios()
    slack = terms.slack()
    lambda_min = float(np.max(ratios))
    worst = int(np.argmin(slack))
    min_slack = float(slack[worst])
    # open interval: λ = 1 is a failure
    holds = min_slack > 0
    witness = None
    if not holds:
        witness = Witness(int(xs[worst]), int(ys[worst]), int(idx[worst]), None,
                          float(terms.lhs[worst]), float(terms.scale[worst]))
    cert = Certificate(holds, condition.condition_type, len(xs), 0, min_slack, tol,
                       witness, lambda_min)
    logger.info("%s: holds=%s lambda_min=%.6g over %d pairs",
                condition, holds, lambda_min, len(xs))
    return cert


def _certify_grid(condition: ContractiveCondition, anchored: AnchoredSpace,
                  self_map: SelfMap, pairs: Sequence[Pair], Lambda: float,
                  grid: EpsilonGrid, tol: Optional[float]) -> Certificate:
    """Certificate for ε-parameterized conditions, checked on every grid value"""
    xs, ys, idx = _pair_arrays(pairs)
    eps = grid.array
    terms: CheckTerms = condition.evaluate(anchored, self_map, xs, ys, eps)
    tau = DEFAULT_SETTINGS.cert_tolerance(anchored.space.dist, tol)
    slack = terms.slack(Lambda)

    # row-major argmin = first minimum in (pair order, grid order)
    flat = int(np.argmin(slack))
    worst_pair, worst_eps = np.unravel_index(flat, slack.shape)
    min_slack = float(slack[worst_pair, worst_eps])
    holds = min_slack >= -tau
    witness = None
    if not holds:
        witness = Witness(
            int(xs[worst_pair]), int(ys[worst_pair]), int(idx[worst_pair]),
            float(eps[worst_eps]), float(terms.lhs[worst_pair]),
            float(terms.rhs(Lambda)[worst_pair, worst_eps]),
        )
    logger.info("%s: holds=%s min_slack=%.6g over %d pairs x %d eps",
                condition, holds, min_slack, len(xs), len(eps))
    return Certificate(holds, condition.condition_type, len(xs), len(eps), min_slack,
                       tau, witness, None)


def rhs_cyclic(x: int, y: int, eps: float, params: PataParams,
               anchored: AnchoredSpace, self_map: SelfMap) -> float:
    """(1-ε)/2 [d(x,Tx)+d(y,Ty)] + Λ ε^α ψ(ε) [1+‖x‖+‖Tx‖+‖y‖+‖Ty‖]^β"""
    if not (0.0 <= eps <= 1.0):
        raise ParameterError(f"ε must lie in [0, 1], got {eps}")
    anchored.space.check_index(x)
    anchored.space.check_index(y)
    terms = KannanPataCondition(params).evaluate(
        anchored, self_map, np.array([x]), np.array([y]), np.array([float(eps)])
    )
    return float(terms.rhs(params.Lambda)[0, 0])


def certify_cyclic_kannan_pata(anchored: AnchoredSpace, self_map: SelfMap,
                               rep: CyclicRepresentation, params: PataParams,
                               grid: Optional[EpsilonGrid] = None,
                               tol: Optional[float] = None) -> Certificate:
    """Check the cyclic Kannan-Pata inequality for all consecutive pairs and grid values"""
    _check_map(anchored.space, self_map)
    require_cyclic(rep, self_map)
    grid = grid or EpsilonGrid.uniform(DEFAULT_SETTINGS.grid_points)
    return _certify_grid(KannanPataCondition(params, cyclic=True), anchored, self_map,
                         consecutive_pairs(rep), params.Lambda, grid, tol)


def certify_kannan_pata(anchored: AnchoredSpace, self_map: SelfMap, params: PataParams,
                        grid: Optional[EpsilonGrid] = None,
                        tol: Optional[float] = None) -> Certificate:
    """The non-cyclic Kannan-Pata inequality over all ordered pairs (m = 1)"""
    _check_map(anchored.space, self_map)
    grid = grid or EpsilonGrid.uniform(DEFAULT_SETTINGS.grid_points)
    return _certify_grid(KannanPataCondition(params, cyclic=False), anchored, self_map,
                         all_pairs(anchored.space.size), params.Lambda, grid, tol)


certify_chakraborty_samanta = certify_kannan_pata


def certify_kannan(space: FiniteMetricSpace, self_map: SelfMap,
                   tol: Optional[float] = None) -> Certificate:
    """Kannan's condition over all ordered pairs; lambda_min is the least admissible λ"""
    _check_map(space, self_map)
    return certify_ratio(KannanCondition(cyclic=False), AnchoredSpace(space, 0), self_map,
                         all_pairs(space.size), tol)


def certify_cyclic_kannan(space: FiniteMetricSpace, self_map: SelfMap,
                          rep: CyclicRepresentation,
                          tol: Optional[float] = None) -> Certificate:
    """Kannan's condition restricted to consecutive pairs x ∈ A_i, y ∈ A_{i+1}"""
    _check_map(space, self_map)
    require_cyclic(rep, self_map)
    return certify_ratio(KannanCondition(cyclic=True), AnchoredSpace(space, 0), self_map,
                         consecutive_pairs(rep), tol)


def certify_pata_banach(anchored: AnchoredSpace, self_map: SelfMap, params: PataParams,
                        grid: Optional[EpsilonGrid] = None,
                        tol: Optional[float] = None) -> Certificate:
    """Pata's condition over all ordered pairs"""
    _check_map(anchored.space, self_map)
    condition = PataCondition(params)
    grid = grid or EpsilonGrid.uniform(DEFAULT_SETTINGS.grid_points)
    return _certify_grid(condition, anchored, self_map, all_pairs(anchored.space.size),
                         params.Lambda, grid, tol)


def kannan_to_pata(lam: float) -> PataParams:
    """Parameters under which a Kannan map with constant λ satisfies the Kannan-Pata family"""
    if not (0.0 < lam < 1.0):
        raise ParameterError(f"Kannan constant must lie in (0, 1), got {lam}")
    return PataParams(Lambda=1.0 / (1.0 - lam), alpha=1.0, beta=1.0, psi=PsiSpec("power", 1.0, 1.0))


def reduction_lambda(lambda_min: float) -> float:
    """Kannan constant to feed kannan_to_pata for a certified lambda_min"""
    if not (0.0 <= lambda_min < 1.0):
        raise ParameterError(f"No Kannan reduction for lambda_min={lambda_min}")
    # a map with constant 0 satisfies the condition for every λ in (0, 1)
    return lambda_min if lambda_min > 0 else 0.5


def lambda_threshold(anchored: AnchoredSpace, self_map: SelfMap, rep: CyclicRepresentation,
                     alpha: float, beta: float, psi: PsiSpec,
                     grid: Optional[EpsilonGrid] = None,
                     tol: Optional[float] = None) -> Optional[float]:
    """Least Λ >= 0 making the cyclic Kannan-Pata certificate hold; None if none does"""
    _check_map(anchored.space, self_map)
    require_cyclic(rep, self_map)
    grid = grid or EpsilonGrid.uniform(DEFAULT_SETTINGS.grid_points)
    params = PataParams(0.0, alpha, beta, psi)
    xs, ys, _ = _pair_arrays(consecutive_pairs(rep))
    terms = KannanPataCondition(params).evaluate(anchored, self_map, xs, ys, grid.array)
    tau = DEFAULT_SETTINGS.cert_tolerance(anchored.space.dist, tol)

    deficit = terms.lhs[:, None] - terms.base
    weighted = terms.weight > 0
    if np.any(deficit[~weighted] > tau):
        return None
    if not np.any(weighted):
        return 0.0
    needed = deficit[weighted] / terms.weight[weighted]
    return max(0.0, float(np.max(needed)))


def reanchor_lambda(params: PataParams, space: FiniteMetricSpace,
                    old_anchor: int, new_anchor: int) -> float:
    """Λ' = Λ·(1 + 2·d(a, a'))^β for moving the anchor from a to a'"""
    shift = space.d(old_anchor, new_anchor)
    return params.Lambda * (1.0 + 2.0 * shift) ** params.beta


def certify(condition: ConditionType, anchored: AnchoredSpace, self_map: SelfMap,
            rep: Optional[CyclicRepresentation] = None, params: Optional[PataParams] = None,
            grid: Optional[EpsilonGrid] = None, tol: Optional[float] = None) -> Certificate:
    """Dispatch to the certifier for the given condition"""
    if condition.needs_partition and rep is None:
        raise StructuralError(f"Condition {condition.value} needs a partition")
    if condition.needs_params and params is None:
        raise StructuralError(f"Condition {condition.value} needs Pata parameters")

    if condition == ConditionType.KANNAN:
        return certify_kannan(anchored.space, self_map, tol)
    elif condition == ConditionType.CYCLIC_KANNAN:
        return certify_cyclic_kannan(anchored.space, self_map, rep, tol)
    elif condition == ConditionType.CYCLIC_KANNAN_PATA:
        return certify_cyclic_kannan_pata(anchored, self_map, rep, params, grid, tol)
    elif condition == ConditionType.KANNAN_PATA:
        return certify_kannan_pata(anchored, self_map, params, grid, tol)
    elif condition == ConditionType.PATA:
        return certify_pata_banach(anchored, self_map, params, grid, tol)
    raise ParameterError(f"Unsupported condition: {condition}")
