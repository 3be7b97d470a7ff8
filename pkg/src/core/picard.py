"""
Picard Iteration Solver
Runs x_{n+1} = T(x_n), checks the theorem's conclusions and the proof's lemmas on traces
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from core.certify import Certificate, certify_cyclic_kannan_pata
from core.conditions import EpsilonGrid, PataParams
from core.cyclic import CyclicRepresentation, SelfMap, intersection, require_cyclic, wrap_index
from core.metric_space import AnchoredSpace
from core.settings import KannanError, ParameterError, StructuralError


logger = logging.getLogger(__name__)

BOUND_NOTE = (
    "The checked bound d(x_n, x_1) <= (k-1)*d(x_2, x_1), n = k mod m, forces x_n = x_1 "
    "whenever k = 1 and n > 1, and allows at most one step's length at k = 2; failures "
    "concentrated at k in {1, 2} are expected and are never asserted."
)


class TerminationReason(Enum):
    """Why a Picard trace stopped"""
    FIXED_POINT = "fixed_point"
    CYCLE_DETECTED = "cycle_detected"
    MAX_ITER = "max_iter"


@dataclass
class PicardTrace:
    """Iterates x_1, x_2, ... with step lengths, norms and tracked set memberships"""

    start: int
    iterates: List[int] = field(default_factory=list)
    steps: List[float] = field(default_factory=list)            # d(x_{n+1}, x_n)
    norms: List[float] = field(default_factory=list)            # c_n = ‖x_n‖
    set_index: List[int] = field(default_factory=list)          # 1-based i with x_n ∈ A_i
    start_distances: List[float] = field(default_factory=list)  # d(x_n, x_1)
    terminated: Optional[TerminationReason] = None

    @property
    def endpoint(self) -> int:
        return self.iterates[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start": self.start,
            "iterates": list(self.iterates),
            "steps": list(self.steps),
            "norms": list(self.norms),
            "set_index": [i - 1 if i > 0 else None for i in self.set_index],
            "terminated": self.terminated.value if self.terminated else None,
        }


class PicardIterator:
    """Steps a self-map from a start point, one application at a time"""

    def __init__(self, anchored: AnchoredSpace, self_map: SelfMap, rep: CyclicRepresentation):
        if self_map.size != anchored.space.size:
            raise StructuralError(
                f"Map has {self_map.size} points but the space has {anchored.space.size}"
            )
        self.anchored = anchored
        self.self_map = self_map
        self.rep = rep
        self.trace: Optional[PicardTrace] = None
        self._visited = set()
        self.applications = 0

    def reset(self, start: int):
        """Start a fresh trace at the given point"""
        self.anchored.space.check_index(start)
        self.trace = PicardTrace(start=start)
        self._visited = {start}
        self.applications = 0
        memberships = self.rep.memberships(start)
        self._record(start, memberships[0] if memberships else 0)

    def _record(self, x: int, set_index: int):
        trace = self.trace
        trace.iterates.append(x)
        trace.norms.append(self.anchored.norm(x))
        trace.set_index.append(set_index)
        trace.start_distances.append(self.anchored.space.d(x, trace.start))

    def _next_set_index(self, x_next: int) -> int:
        current = self.trace.set_index[-1]
        if current > 0:
            candidate = wrap_index(current + 1, self.rep.m)
            if self.rep.contains(candidate, x_next):
                return candidate
        memberships = self.rep.memberships(x_next)
        return memberships[0] if memberships else 0

    def step(self) -> Dict[str, Any]:
        """Apply T once and return what happened"""
        if self.trace is None:
            return {"error": "Iterator has no start point"}
        if self.trace.terminated is not None:
            return {"error": f"Trace already terminated ({self.trace.terminated.value})"}

        x = self.trace.iterates[-1]
        x_next = self.self_map(x)
        step_length = self.anchored.space.d(x_next, x)
        self.trace.steps.append(step_length)
        self._record(x_next, self._next_set_index(x_next))
        self.applications += 1

        if x_next == x:
            self.trace.terminated = TerminationReason.FIXED_POINT
        elif x_next in self._visited:
            self.trace.terminated = TerminationReason.CYCLE_DETECTED
        self._visited.add(x_next)
        return {"success": True, "x": x_next, "step": step_length,
                "applications": self.applications}

    def run(self, max_iter: int) -> PicardTrace:
        """Step until a fixed point, a cycle, or max_iter applications"""
        if max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
        while self.trace.terminated is None:
            if self.applications >= max_iter:
                self.trace.terminated = TerminationReason.MAX_ITER
                break
            self.step()
        return self.trace

    def get_state(self) -> Dict[str, Any]:
        return {
            "start": self.trace.start if self.trace else None,
            "current": self.trace.iterates[-1] if self.trace else None,
            "applications": self.applications,
            "terminated": self.trace.terminated.value if self.trace and self.trace.terminated else None,
        }


def iterate(anchored: AnchoredSpace, self_map: SelfMap, rep: CyclicRepresentation,
            start: int, max_iter: Optional[int] = None) -> PicardTrace:
    """Picard trace from start; max_iter defaults to n + 1 applications"""
    iterator = PicardIterator(anchored, self_map, rep)
    iterator.reset(start)
    return iterator.run(max_iter if max_iter is not None else anchored.space.size + 1)


def find_fixed_points_exhaustive(self_map: SelfMap) -> List[int]:
    """Every x with T(x) = x, ascending"""
    return [x for x, tx in enumerate(self_map.image) if tx == x]


@dataclass(frozen=True)
class InvariantFailure:
    """A trace invariant broken at index n"""

    invariant: str
    n: int
    values: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {"invariant": self.invariant, "n": self.n, "values": dict(self.values)}


@dataclass
class TraceDiagnostics:
    """Lemma checks on one trace plus the reported boundedness diagnostic"""

    start: int
    failures: List[InvariantFailure] = field(default_factory=list)
    c_max: float = 0.0
    # k -> {"passed": count, "failed": count}
    bound_counts: Dict[int, Dict[str, int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def bound_totals(self) -> Dict[str, int]:
        return {
            "passed": sum(c["passed"] for c in self.bound_counts.values()),
            "failed": sum(c["failed"] for c in self.bound_counts.values()),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start": self.start,
            "ok": self.ok,
            "failures": [f.to_dict() for f in self.failures],
            "c_max": self.c_max,
            "bound_counts": {str(k): dict(v) for k, v in sorted(self.bound_counts.items())},
        }


class TraceInvariantError(KannanError):
    """A certified instance produced a trace that breaks a proof lemma"""

    def __init__(self, failure: InvariantFailure, diagnostics: TraceDiagnostics):
        self.failure = failure
        self.diagnostics = diagnostics
        super().__init__(
            f"Trace from {diagnostics.start}: {failure.invariant} fails at n={failure.n} "
            f"({failure.values})"
        )


def check_trace_invariants(trace: PicardTrace, certificate: Certificate,
                           rep: CyclicRepresentation,
                           tol: Optional[float] = None,
                           assert_holds: bool = True) -> TraceDiagnostics:
    """Check monotone steps, arrival at a fixed point and set cycling on a trace

    Failures raise TraceInvariantError when the certificate holds (and assert_holds
    is set); otherwise they are only recorded.
    """
    tau = certificate.tolerance if tol is None else tol
    diag = TraceDiagnostics(start=trace.start)
    steps = trace.steps

    for n in range(len(steps) - 1):
        if steps[n + 1] > steps[n] + tau:
            diag.failures.append(InvariantFailure(
                "monotone_steps", n + 1, {"previous": steps[n], "current": steps[n + 1]}
            ))

    if trace.terminated != TerminationReason.FIXED_POINT or not steps or steps[-1] != 0:
        diag.failures.append(InvariantFailure(
            "terminal_step_zero", len(steps),
            {"terminated": trace.terminated.value if trace.terminated else None,
             "last_step": steps[-1] if steps else None},
        ))

    for n in range(len(trace.set_index) - 1):
        current, following = trace.set_index[n], trace.set_index[n + 1]
        if current < 1 or following != wrap_index(current + 1, rep.m):
            diag.failures.append(InvariantFailure(
                "set_cycling", n + 1, {"from": current, "to": following}
            ))

    diag.c_max = max(trace.norms) if trace.norms else 0.0

    # c_n <= (k-1) c_2 with n = k mod m, measured from x_1 = trace start
    if steps:
        c2 = steps[0]
        for n, offset in enumerate(trace.start_distances, 1):
            k = wrap_index(n, rep.m)
            counts = diag.bound_counts.setdefault(k, {"passed": 0, "failed": 0})
            if offset <= (k - 1) * c2 + tau:
                counts["passed"] += 1
            else:
                counts["failed"] += 1

    if diag.failures and certificate.holds and assert_holds:
        raise TraceInvariantError(diag.failures[0], diag)
    if diag.failures:
        logger.debug("trace from %d: %d unasserted invariant failures",
                     trace.start, len(diag.failures))
    return diag


@dataclass
class FixedPointReport:
    """Theorem conclusions checked on one instance"""

    fixed_points: List[int]
    unique: bool
    in_intersection: bool
    traces: List[PicardTrace]
    all_converge_to_same: bool
    certificate: Certificate
    intersection: List[int] = field(default_factory=list)
    restriction_closed: bool = True
    oracle_agrees: bool = True
    diagnostics: List[TraceDiagnostics] = field(default_factory=list)

    @property
    def trace_endpoints(self) -> List[int]:
        return sorted({t.endpoint for t in self.traces
                       if t.terminated == TerminationReason.FIXED_POINT})

    @property
    def conforms(self) -> bool:
        return (self.unique and self.in_intersection and self.all_converge_to_same
                and self.restriction_closed and self.oracle_agrees)

    def bound_totals(self) -> Dict[str, int]:
        totals = {"passed": 0, "failed": 0}
        for diag in self.diagnostics:
            for key, value in diag.bound_totals().items():
                totals[key] += value
        return totals

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fixed_points": list(self.fixed_points),
            "unique": self.unique,
            "in_intersection": self.in_intersection,
            "intersection": list(self.intersection),
            "all_converge_to_same": self.all_converge_to_same,
            "restriction_closed": self.restriction_closed,
            "oracle_agrees": self.oracle_agrees,
            "trace_endpoints": self.trace_endpoints,
            "asserted": self.certificate.holds,
            "traces": [t.to_dict() for t in self.traces],
            "diagnostics": {
                "traces": [d.to_dict() for d in self.diagnostics],
                "c_max": max((d.c_max for d in self.diagnostics), default=0.0),
                "bound": self.bound_totals(),
                "bound_note": BOUND_NOTE,
            },
            "certificate": self.certificate.to_dict(),
        }


class TheoremConformanceError(KannanError):
    """A certified instance whose fixed-point conclusions do not hold"""

    def __init__(self, report: FixedPointReport):
        self.report = report
        flags = {
            "unique": report.unique,
            "in_intersection": report.in_intersection,
            "all_converge_to_same": report.all_converge_to_same,
            "restriction_closed": report.restriction_closed,
            "oracle_agrees": report.oracle_agrees,
        }
        broken = ", ".join(name for name, value in flags.items() if not value)
        super().__init__(f"Certificate holds but conclusions fail: {broken}")


def solve(anchored: AnchoredSpace, self_map: SelfMap, rep: CyclicRepresentation,
          params: PataParams, grid: Optional[EpsilonGrid] = None,
          max_iter: Optional[int] = None, tol: Optional[float] = None) -> FixedPointReport:
    """Certify, iterate from every point and compare against the exhaustive scan

    When the certificate holds the conclusions are asserted: TheoremConformanceError
    or TraceInvariantError is raised on any violation.
    """
    require_cyclic(rep, self_map)
    certificate = certify_cyclic_kannan_pata(anchored, self_map, rep, params, grid, tol)
    traces = [iterate(anchored, self_map, rep, start, max_iter)
              for start in range(anchored.space.size)]
    fixed_points = find_fixed_points_exhaustive(self_map)
    common = intersection(rep)
    common_set = set(common)

    endpoints = {t.endpoint for t in traces}
    all_fixed = all(t.terminated == TerminationReason.FIXED_POINT for t in traces)
    report = FixedPointReport(
        fixed_points=fixed_points,
        unique=len(fixed_points) == 1,
        in_intersection=bool(fixed_points) and all(x in common_set for x in fixed_points),
        traces=traces,
        all_converge_to_same=all_fixed and len(endpoints) == 1,
        certificate=certificate,
        intersection=common,
        restriction_closed=all(self_map(x) in common_set for x in common),
        oracle_agrees=all_fixed and endpoints == set(fixed_points),
    )
    report.diagnostics = [check_trace_invariants(t, certificate, rep, assert_holds=False)
                          for t in traces]

    if certificate.holds:
        if not report.conforms:
            raise TheoremConformanceError(report)
        for diag in report.diagnostics:
            if diag.failures:
                raise TraceInvariantError(diag.failures[0], diag)
    else:
        logger.warning("certificate fails (min_slack=%.6g); conclusions reported, not asserted",
                       certificate.min_slack)
    logger.info("solve: fixed_points=%s unique=%s in_intersection=%s converge=%s",
                fixed_points, report.unique, report.in_intersection,
                report.all_converge_to_same)
    return report
