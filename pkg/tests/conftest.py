import json
import os
import sys
from types import SimpleNamespace

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from core.cyclic import CyclicRepresentation, SelfMap
from core.metric_space import AnchoredSpace, FiniteMetricSpace


def _reference(dist, image, sets):
    space = FiniteMetricSpace.from_matrix(dist)
    return SimpleNamespace(
        space=space,
        anchored=AnchoredSpace(space, 0),
        self_map=SelfMap(image),
        rep=CyclicRepresentation(sets),
        dist=dist,
        image=image,
        sets=sets,
    )


@pytest.fixture
def e1():
    """Two points at distance 1, swap map, A_1 = {p0}, A_2 = {p1}"""
    return _reference([[0.0, 1.0], [1.0, 0.0]], [1, 0], [[0], [1]])


@pytest.fixture
def e2():
    """Three equidistant points, constant map to p2, A_1 = {p0, p2}, A_2 = {p1, p2}"""
    dist = [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]
    return _reference(dist, [2, 2, 2], [[0, 2], [1, 2]])


@pytest.fixture
def e3():
    """Collinear p0 - p1 - p2 with gaps 1 and 2; p0->p1, p1->p1, p2->p0"""
    dist = [[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]]
    return _reference(dist, [1, 1, 0], [[0, 1], [1, 2]])


@pytest.fixture
def write_instance(tmp_path):
    """Write an instance document to tmp_path and return its path as a string"""

    def _write(ref=None, name="instance.json", pata=None, with_partition=True, **extra):
        data = {}
        if ref is not None:
            data = {
                "points": list(ref.space.labels),
                "dist": ref.dist,
                "anchor": 0,
                "map": list(ref.image),
            }
            if with_partition:
                data["partition"] = ref.sets
        if pata is not None:
            data["pata"] = {"Lambda": pata, "alpha": 1, "beta": 1,
                            "psi": {"kind": "power", "p": 1, "c": 1}}
        data.update(extra)
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write
