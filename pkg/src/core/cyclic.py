"""
Cyclic Representation Implementation
Self-maps, covers A_1..A_m with T(A_i) ⊂ A_{i+1}, and modular set indexing
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from core.settings import ParameterError, StructuralError


logger = logging.getLogger(__name__)


def wrap_index(j: int, m: int) -> int:
    """Return the unique i in 1..m with i ≡ j (mod m)"""
    if j < 1 or m < 1:
        raise ParameterError(f"wrap_index needs j >= 1 and m >= 1, got j={j}, m={m}")
    return (j - 1) % m + 1


class SelfMap:
    """A total map T: Y -> Y stored as an image array"""

    def __init__(self, image: Sequence[int]):
        image = [int(t) for t in image]
        n = len(image)
        if n == 0:
            raise StructuralError("A self-map needs at least one point")
        for i, t in enumerate(image):
            if not (0 <= t < n):
                raise StructuralError(f"Map image of point {i} is {t}, outside 0..{n - 1}")
        self._image = tuple(image)

    @classmethod
    def identity(cls, n: int) -> "SelfMap":
        return cls(list(range(n)))

    @classmethod
    def constant(cls, n: int, target: int) -> "SelfMap":
        return cls([target] * n)

    @property
    def image(self) -> Tuple[int, ...]:
        return self._image

    @property
    def size(self) -> int:
        return len(self._image)

    def __len__(self) -> int:
        return len(self._image)

    def __call__(self, x: int) -> int:
        return self._image[x]

    def __eq__(self, other) -> bool:
        return isinstance(other, SelfMap) and self._image == other._image

    def __hash__(self) -> int:
        return hash(self._image)

    def __repr__(self) -> str:
        return f"SelfMap({list(self._image)})"


class CyclicRepresentation:
    """Non-empty point sets A_1..A_m, stored as sorted unique index tuples"""

    def __init__(self, sets: Iterable[Iterable[int]]):
        normalized = []
        for pos, members in enumerate(sets, 1):
            members = sorted({int(x) for x in members})
            if not members:
                raise StructuralError(f"Set A_{pos} is empty")
            if members[0] < 0:
                raise StructuralError(f"Set A_{pos} contains a negative index {members[0]}")
            normalized.append(tuple(members))
        if not normalized:
            raise StructuralError("A cyclic representation needs at least one set")
        self._sets = tuple(normalized)
        self._lookup = tuple(frozenset(s) for s in self._sets)

    @classmethod
    def trivial(cls, n: int) -> "CyclicRepresentation":
        """The m = 1 representation A_1 = Y"""
        return cls([range(n)])

    @property
    def sets(self) -> Tuple[Tuple[int, ...], ...]:
        return self._sets

    @property
    def m(self) -> int:
        return len(self._sets)

    def members(self, i: int) -> Tuple[int, ...]:
        """A_i for any positive i, using the A_j := A_{wrap(j)} convention"""
        return self._sets[wrap_index(i, self.m) - 1]

    def contains(self, i: int, x: int) -> bool:
        return x in self._lookup[wrap_index(i, self.m) - 1]

    def memberships(self, x: int) -> List[int]:
        """All 1-based i with x ∈ A_i"""
        return [i for i, s in enumerate(self._lookup, 1) if x in s]

    def max_index(self) -> int:
        return max(s[-1] for s in self._sets)

    def __eq__(self, other) -> bool:
        return isinstance(other, CyclicRepresentation) and self._sets == other._sets

    def __hash__(self) -> int:
        return hash(self._sets)

    def __repr__(self) -> str:
        return f"CyclicRepresentation({[list(s) for s in self._sets]})"


@dataclass(frozen=True)
class CyclicValidation:
    """Outcome of checking the cover and T(A_i) ⊂ A_{i+1} conditions"""

    uncovered: Tuple[int, ...] = ()
    # (i, x, T(x)) with x ∈ A_i and T(x) ∉ A_{wrap(i+1)}
    offending: Tuple[Tuple[int, int, int], ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.uncovered and not self.offending

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.is_valid,
            "uncovered": list(self.uncovered),
            "offending": [
                {"set": i - 1, "point": x, "image": tx} for i, x, tx in self.offending
            ],
        }


class CyclicError(StructuralError):
    """The sets are not a cyclic representation with respect to the map"""

    def __init__(self, validation: CyclicValidation):
        self.validation = validation
        super().__init__(
            f"Not a cyclic representation: {len(validation.uncovered)} uncovered points, "
            f"{len(validation.offending)} inclusion violations"
        )


def validate_cyclic(rep: CyclicRepresentation, self_map: SelfMap) -> CyclicValidation:
    """Check Y = ⋃A_i and T(A_i) ⊂ A_{i+1} (with T(A_m) ⊂ A_1)"""
    n = self_map.size
    if rep.max_index() >= n:
        raise StructuralError(
            f"Representation references point {rep.max_index()} but the map has {n} points"
        )
    covered = set()
    offending = []
    for i in range(1, rep.m + 1):
        covered.update(rep.members(i))
        for x in rep.members(i):
            tx = self_map(x)
            if not rep.contains(i + 1, tx):
                offending.append((i, x, tx))
    uncovered = tuple(x for x in range(n) if x not in covered)
    result = CyclicValidation(uncovered, tuple(offending))
    if not result.is_valid:
        logger.debug("validate_cyclic: uncovered=%s offending=%s", uncovered, offending)
    return result


def require_cyclic(rep: CyclicRepresentation, self_map: SelfMap) -> None:
    """Raise CyclicError unless validate_cyclic passes"""
    result = validate_cyclic(rep, self_map)
    if not result.is_valid:
        raise CyclicError(result)


def consecutive_pairs(rep: CyclicRepresentation) -> List[Tuple[int, int, int]]:
    """(x, y, i) with x ∈ A_i and y ∈ A_{i+1}, ordered by (i, x, y)"""
    pairs = []
    for i in range(1, rep.m + 1):
        successors = rep.members(i + 1)
        for x in rep.members(i):
            for y in successors:
                pairs.append((x, y, i))
    return pairs


def intersection(rep: CyclicRepresentation) -> List[int]:
    """⋂A_i as a sorted list, possibly empty"""
    common = set(rep.sets[0])
    for s in rep.sets[1:]:
        common &= set(s)
    return sorted(common)
