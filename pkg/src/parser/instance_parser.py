"""
Instance File Parser
Parses and serializes the single self-describing JSON instance format
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from jsonschema import Draft202012Validator

from core.conditions import EpsilonGrid, PataParams
from core.cyclic import CyclicRepresentation, SelfMap
from core.metric_space import AnchoredSpace, FiniteMetricSpace
from core.settings import KannanError, StructuralError


_INDEX = {"type": "integer", "minimum": 0}

INSTANCE_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["points", "dist"],
    "additionalProperties": False,
    "properties": {
        "points": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "dist": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "number"}},
        },
        "anchor": _INDEX,
        "map": {"type": "array", "minItems": 1, "items": _INDEX},
        "partition": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": _INDEX},
        },
        "pata": {
            "type": "object",
            "required": ["Lambda", "alpha", "beta"],
            "additionalProperties": False,
            "properties": {
                "Lambda": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "minimum": 1},
                "beta": {"type": "number", "minimum": 0},
                "psi": {
                    "type": "object",
                    "required": ["kind", "p", "c"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"const": "power"},
                        "p": {"type": "number", "exclusiveMinimum": 0},
                        "c": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "grid": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["points"],
                    "additionalProperties": False,
                    "properties": {"points": {"type": "integer", "minimum": 2}},
                },
                {
                    "type": "object",
                    "required": ["values"],
                    "additionalProperties": False,
                    "properties": {
                        "values": {
                            "type": "array",
                            "minItems": 2,
                            "items": {"type": "number", "minimum": 0, "maximum": 1},
                        }
                    },
                },
            ]
        },
        "meta": {"type": "object"},
    },
}

GEN_CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_points": {"type": "integer", "minimum": 1},
        "m_sets": {"type": "integer", "minimum": 1},
        "method": {"enum": ["euclidean_embed", "random_repair"]},
        "embed_dim": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "overlap_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "map_mode": {"enum": ["uniform", "sink"]},
        "sink_probability": {"type": "number", "minimum": 0, "maximum": 1},
    },
}


class ParseError(KannanError):
    """Instance parsing error"""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        self.detail = message
        super().__init__(f"{location}: {message}" if location else message)


@dataclass
class InstanceFile:
    """Everything one experiment needs; sections beyond points/dist are optional"""

    points: List[str]
    dist: List[List[float]]
    anchor: int = 0
    map: Optional[List[int]] = None
    partition: Optional[List[List[int]]] = None
    pata: Optional[PataParams] = None
    grid: Optional[EpsilonGrid] = None
    meta: Optional[Dict[str, Any]] = None

    def build_space(self, tau_metric: Optional[float] = None) -> FiniteMetricSpace:
        return FiniteMetricSpace(self.points, self.dist, tau_metric)

    def build_anchored(self, tau_metric: Optional[float] = None) -> AnchoredSpace:
        return AnchoredSpace(self.build_space(tau_metric), self.anchor)

    def build_map(self) -> SelfMap:
        if self.map is None:
            raise StructuralError("Instance has no map section")
        if len(self.map) != len(self.points):
            raise StructuralError(
                f"Map has {len(self.map)} entries but there are {len(self.points)} points"
            )
        return SelfMap(self.map)

    def build_rep(self) -> CyclicRepresentation:
        if self.partition is None:
            raise StructuralError("Instance has no partition section")
        return CyclicRepresentation(self.partition)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "points": list(self.points),
            "dist": [list(row) for row in self.dist],
            "anchor": self.anchor,
        }
        if self.map is not None:
            data["map"] = list(self.map)
        if self.partition is not None:
            data["partition"] = [list(s) for s in self.partition]
        if self.pata is not None:
            data["pata"] = self.pata.to_dict()
        if self.grid is not None:
            data["grid"] = self.grid.to_dict()
        if self.meta is not None:
            data["meta"] = dict(self.meta)
        return data


def _reject_constant(name: str):
    raise ParseError(f"Non-finite number {name} is not allowed")


def _location(path) -> str:
    location = "$"
    for part in path:
        location += f"[{part}]" if isinstance(part, int) else f".{part}"
    return location


class InstanceParser:
    """JSON instance parser with schema validation"""

    def __init__(self, schema: Optional[Dict[str, Any]] = None):
        self.validator = Draft202012Validator(schema or INSTANCE_SCHEMA)

    def load_json(self, text: str) -> Any:
        """Decode JSON text, reporting line and column on failure"""
        try:
            return json.loads(text, parse_constant=_reject_constant)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, f"line {e.lineno} column {e.colno}")

    def validate_syntax(self, data: Any) -> List[Tuple[str, str]]:
        """Return (location, message) for every schema violation"""
        errors = sorted(self.validator.iter_errors(data), key=lambda e: _location(e.absolute_path))
        return [(_location(e.absolute_path), e.message) for e in errors]

    def parse(self, text: str) -> InstanceFile:
        """Parse instance JSON text"""
        data = self.load_json(text)
        errors = self.validate_syntax(data)
        if errors:
            location, message = errors[0]
            raise ParseError(message, location)

        try:
            pata = PataParams.from_dict(data["pata"]) if "pata" in data else None
        except KannanError as e:
            raise ParseError(str(e), "$.pata")
        try:
            grid = EpsilonGrid.from_dict(data["grid"]) if "grid" in data else None
        except KannanError as e:
            raise ParseError(str(e), "$.grid")

        return InstanceFile(
            points=list(data["points"]),
            dist=[[float(v) for v in row] for row in data["dist"]],
            anchor=int(data.get("anchor", 0)),
            map=list(data["map"]) if "map" in data else None,
            partition=[list(s) for s in data["partition"]] if "partition" in data else None,
            pata=pata,
            grid=grid,
            meta=dict(data["meta"]) if "meta" in data else None,
        )

    def parse_file(self, path: Union[str, Path]) -> Tuple[InstanceFile, str]:
        """Parse a file; also return the sha256 digest of its bytes"""
        raw = read_input(path)
        return self.parse(decode_input(raw, path)), digest(raw)

    def serialize(self, instance: InstanceFile) -> str:
        return dumps(instance.to_dict())


def read_input(path: Union[str, Path]) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise ParseError(f"Cannot read input: {e.strerror}", str(path))


def decode_input(raw: bytes, path: Union[str, Path]) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"Input is not UTF-8: {e.reason}", str(path))


def digest(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def dumps(data: Any) -> str:
    """Stable JSON text: sorted keys, shortest round-trip floats, trailing newline"""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def parse_gen_config(text: str) -> Dict[str, Any]:
    """Decode and schema-check a generator config document"""
    parser = InstanceParser(GEN_CONFIG_SCHEMA)
    data = parser.load_json(text)
    errors = parser.validate_syntax(data)
    if errors:
        location, message = errors[0]
        raise ParseError(message, location)
    return data
