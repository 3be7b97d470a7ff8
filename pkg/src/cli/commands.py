"""
Command Implementations
validate / certify / solve / generate, each producing an exit status and a RunReport
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from core.certify import certify
from core.conditions import ConditionType, EpsilonGrid
from core.cyclic import CyclicValidation, validate_cyclic
from core.metric_space import MetricError, validate_metric
from core.picard import FixedPointReport, TheoremConformanceError, TraceInvariantError, solve
from core.settings import (
    TOOL_VERSION, GenerationError, KannanError, ParameterError, StructuralError,
)
from generator.instance_gen import (
    CyclicInstance, GenConfig, classify_instance, random_cyclic_instance,
    search_separating_instances,
)
from parser.instance_parser import (
    InstanceFile, InstanceParser, ParseError, decode_input, digest, dumps, parse_gen_config,
    read_input,
)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2

CERTIFY_CONDITIONS = ("kannan", "cyclic-kannan", "ck-pata", "cs", "pata")


@dataclass
class RunReport:
    """Provenance plus result payload of one command invocation"""

    tool_version: str
    command: str
    input_digest: Optional[str]
    config: Dict[str, Any]
    result: Dict[str, Any] = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = {
            "tool_version": self.tool_version,
            "command": self.command,
            "input_digest": self.input_digest,
            "config": self.config,
            "result": self.result,
        }
        if include_timing:
            data["timing"] = self.timing
        return data

    def to_json(self, include_timing: bool = True) -> str:
        return dumps(self.to_dict(include_timing))


def _error_payload(error: Exception) -> Dict[str, Any]:
    if isinstance(error, ParseError):
        payload = {"kind": "parse", "message": error.detail, "location": error.location}
    elif isinstance(error, ParameterError):
        payload = {"kind": "parameter", "message": str(error), "location": None}
    elif isinstance(error, GenerationError):
        payload = {"kind": "generation", "message": str(error), "location": None}
    elif isinstance(error, OSError):
        payload = {"kind": "io", "message": str(error), "location": getattr(error, "filename", None)}
    else:
        payload = {"kind": "structural", "message": str(error), "location": None}
    if isinstance(error, MetricError):
        payload["violations"] = error.report.to_dict()["violations"]
    return {"error": payload}


class CommandRunner:
    """Runs one command at a time and collects console lines for the user"""

    def __init__(self, tol: Optional[float] = None, grid_points: Optional[int] = None):
        self.tol = tol
        self.grid_points = grid_points
        self.console: List[str] = []
        self.parser = InstanceParser()

    def _run(self, command: str, config: Dict[str, Any], input_digest: Optional[str],
             body: Callable[[RunReport], int]) -> Tuple[int, RunReport]:
        report = RunReport(TOOL_VERSION, command, input_digest, config)
        started = time.perf_counter()
        try:
            code = body(report)
        except (KannanError, OSError) as e:
            logger.debug("%s failed: %r", command, e)
            report.result = _error_payload(e)
            self.console.append(f"✗ {command}: {e}")
            code = EXIT_ERROR
        report.timing = {"seconds": time.perf_counter() - started}
        return code, report

    def _load(self, input_path: str) -> Tuple[InstanceFile, str]:
        instance, input_digest = self.parser.parse_file(input_path)
        if len(instance.dist) != len(instance.points):
            raise StructuralError(
                f"dist has {len(instance.dist)} rows but there are {len(instance.points)} points"
            )
        if not (0 <= instance.anchor < len(instance.points)):
            raise StructuralError(
                f"Anchor {instance.anchor} out of range for {len(instance.points)} points"
            )
        return instance, input_digest

    def _grid(self, instance: InstanceFile) -> Optional[EpsilonGrid]:
        if self.grid_points is not None:
            return EpsilonGrid.uniform(self.grid_points)
        return instance.grid

    def _config(self, input_path: str, **extra) -> Dict[str, Any]:
        config = {"input": Path(input_path).name, "tol": self.tol, "grid": self.grid_points}
        config.update(extra)
        return config

    def _digest_or_none(self, input_path: str) -> Optional[str]:
        try:
            return digest(read_input(input_path))
        except ParseError:
            return None

    # validate

    def validate(self, input_path: str) -> Tuple[int, RunReport]:
        """Run the metric validator and, when present, the map and cyclic checks"""

        def body(report: RunReport) -> int:
            instance, _ = self._load(input_path)
            metric = validate_metric(instance.dist, self.tol)
            cyclic: Optional[CyclicValidation] = None
            if instance.partition is not None:
                rep = instance.build_rep()
                if instance.map is not None:
                    cyclic = validate_cyclic(rep, instance.build_map())
                else:
                    if rep.max_index() >= len(instance.points):
                        raise StructuralError(
                            f"Partition references point {rep.max_index()} "
                            f"but there are {len(instance.points)} points"
                        )
                    covered = {x for s in rep.sets for x in s}
                    cyclic = CyclicValidation(
                        tuple(x for x in range(len(instance.points)) if x not in covered)
                    )
            elif instance.map is not None:
                instance.build_map()

            valid = metric.is_valid and (cyclic is None or cyclic.is_valid)
            report.result = {
                "valid": valid,
                "metric": metric.to_dict(),
                "cyclic": cyclic.to_dict() if cyclic is not None else None,
            }
            if valid:
                self.console.append(f"✓ Valid instance: {len(instance.points)} points")
                return EXIT_OK
            self.console.append(f"✗ Validation failed: {len(metric.violations)} metric violations")
            for v in metric.violations:
                self.console.append(f"  {v.kind} at {list(v.indices)}: {v.magnitude:.6g}")
            if cyclic is not None and not cyclic.is_valid:
                self.console.append(
                    f"  cyclic: uncovered={list(cyclic.uncovered)} "
                    f"offending={len(cyclic.offending)}"
                )
            return EXIT_FAILED

        return self._run("validate", self._config(input_path),
                         self._digest_or_none(input_path), body)

    # certify

    def certify(self, input_path: str, condition: str) -> Tuple[int, RunReport]:
        """Certify one inequality family on the instance"""

        def body(report: RunReport) -> int:
            if condition not in CERTIFY_CONDITIONS:
                raise StructuralError(f"Condition {condition} cannot be certified here")
            cond = ConditionType(condition)
            instance, _ = self._load(input_path)
            if cond.needs_params and instance.pata is None:
                raise StructuralError(f"Condition {condition} needs a pata section")
            anchored = instance.build_anchored()
            rep = instance.build_rep() if cond.needs_partition else None
            cert = certify(cond, anchored, instance.build_map(), rep, instance.pata,
                           self._grid(instance), self.tol)
            report.result = {"certificate": cert.to_dict()}

            if cert.lambda_min is not None:
                detail = f"lambda_min={cert.lambda_min:.6g}"
            else:
                detail = f"min_slack={cert.min_slack:.6g} over {cert.eps_checked} ε values"
            if cert.holds:
                self.console.append(f"✓ {condition} holds ({detail}, {cert.pairs_checked} pairs)")
                return EXIT_OK
            self.console.append(f"✗ {condition} fails ({detail})")
            w = cert.witness
            if w is not None:
                labels = anchored.space.labels
                self.console.append(
                    f"  witness x={labels[w.x]} y={labels[w.y]} eps={w.eps} "
                    f"lhs={w.lhs:.6g} rhs={w.rhs:.6g}"
                )
            return EXIT_FAILED

        return self._run("certify", self._config(input_path, condition=condition),
                         self._digest_or_none(input_path), body)

    # solve

    def solve(self, input_path: str, max_iter: Optional[int] = None) -> Tuple[int, RunReport]:
        """Solve by Picard iteration and check the fixed-point conclusions"""

        def body(report: RunReport) -> int:
            instance, _ = self._load(input_path)
            if instance.pata is None:
                raise StructuralError("solve needs a pata section")
            anchored = instance.build_anchored()
            rep = instance.build_rep()
            try:
                result = solve(anchored, instance.build_map(), rep, instance.pata,
                               self._grid(instance), max_iter, self.tol)
            except TheoremConformanceError as e:
                report.result = e.report.to_dict()
                report.result["conformance_error"] = str(e)
                self.console.append(f"✗ {e}")
                return EXIT_FAILED
            except TraceInvariantError as e:
                report.result = {"trace_invariant": e.failure.to_dict(),
                                 "diagnostics": e.diagnostics.to_dict()}
                self.console.append(f"✗ {e}")
                return EXIT_FAILED

            report.result = result.to_dict()
            return self._summarize_solve(result, anchored.space.labels)

        return self._run("solve", self._config(input_path, max_iter=max_iter),
                         self._digest_or_none(input_path), body)

    def _summarize_solve(self, result: FixedPointReport, labels) -> int:
        names = [labels[x] for x in result.fixed_points]
        if result.certificate.holds and result.conforms:
            self.console.append(f"✓ Unique fixed point {names[0]}, reached from every start")
            return EXIT_OK
        self.console.append(
            f"✗ Certificate fails (min_slack={result.certificate.min_slack:.6g}); "
            f"fixed points {names}"
        )
        if not result.conforms:
            self.console.append("⚠ Fixed-point conclusions do not hold (not asserted)")
        return EXIT_FAILED

    # generate

    def generate(self, out_dir: str, config_path: Optional[str] = None,
                 overrides: Optional[Dict[str, Any]] = None,
                 search_separating: bool = False, budget: int = 1) -> Tuple[int, RunReport]:
        """Write generated instance files and a manifest into out_dir"""
        values: Dict[str, Any] = {}
        report_config: Dict[str, Any] = {"search_separating": search_separating,
                                         "budget": budget if search_separating else None}

        def body(report: RunReport) -> int:
            if config_path is not None:
                raw = read_input(config_path)
                report.input_digest = digest(raw)
                values.update(parse_gen_config(decode_input(raw, config_path)))
            values.update({k: v for k, v in (overrides or {}).items() if v is not None})
            cfg = GenConfig.from_dict(values)
            report.config.update(cfg.to_dict())

            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            grid = None
            if self.grid_points is not None:
                grid = EpsilonGrid.uniform(self.grid_points)

            entries = []
            if search_separating:
                search = search_separating_instances(cfg, budget, grid)
                for instance, cls in search.separating:
                    name = f"separating_{cls.label}_{instance.stream:05d}.json"
                    entries.append(self._write_instance(out / name, cfg, instance, cls))
                manifest = {
                    "config": cfg.to_dict(),
                    "budget": budget,
                    "class_counts": search.class_counts,
                    "holds_counts": search.holds_counts,
                    "instances": entries,
                }
            else:
                instance = random_cyclic_instance(cfg, stream=0)
                cls = classify_instance(instance, grid)
                entries.append(self._write_instance(out / f"instance_s{cfg.seed}.json",
                                                    cfg, instance, cls))
                manifest = {
                    "config": cfg.to_dict(),
                    "budget": 1,
                    "class_counts": {cls.label: 1},
                    "instances": entries,
                }
            manifest["tool_version"] = TOOL_VERSION
            (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
            report.result = manifest

            self.console.append(f"✓ Wrote {len(entries)} instance files to {out}")
            for label, count in manifest["class_counts"].items():
                self.console.append(f"  {label}: {count}")
            return EXIT_OK

        return self._run("generate", report_config, None, body)

    def _write_instance(self, path: Path, cfg: GenConfig, instance: CyclicInstance,
                        cls) -> Dict[str, Any]:
        instance_file = to_instance_file(cfg, instance, cls.reduction_params)
        text = self.parser.serialize(instance_file)
        path.write_text(text, encoding="utf-8")
        logger.debug("wrote %s (%s)", path, cls.label)
        return {
            "file": path.name,
            "stream": instance.stream,
            "class": cls.label,
            "digest": digest(text.encode("utf-8")),
        }


def to_instance_file(cfg: GenConfig, instance: CyclicInstance, pata=None) -> InstanceFile:
    """The instance file for a generated instance; pata holds the reduction params if any"""
    space = instance.space
    return InstanceFile(
        points=list(space.labels),
        dist=space.dist.tolist(),
        anchor=0,
        map=list(instance.self_map.image),
        partition=[list(s) for s in instance.rep.sets],
        pata=pata,
        meta={"seed": cfg.seed, "stream": instance.stream, "method": cfg.method.value},
    )
