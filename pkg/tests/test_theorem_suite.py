"""
Seeded property suite: every certified cyclic Kannan instance must behave as the
fixed-point theorem says
"""

import math

import pytest

from core.certify import (
    certify_cyclic_kannan, certify_cyclic_kannan_pata, certify_kannan, kannan_to_pata,
    reanchor_lambda, reduction_lambda,
)
from core.conditions import EpsilonGrid
from core.metric_space import AnchoredSpace
from core.picard import TerminationReason, find_fixed_points_exhaustive, iterate, solve
from generator.instance_gen import GenConfig, MapMode, make_rng, random_cyclic_instance

SUITE_SIZE = 1000
NONTRIVIAL_QUOTA = 550
MAX_DRAWS = 30000
LAMBDA_CAP = 0.9


def _is_constant(self_map):
    return len(set(self_map.image)) == 1


def _draw(picker_stream, sink_range, quota, first_stream=0, skip_constant=False):
    """Certified sink-mode instances with 2..12 points, until quota or MAX_DRAWS"""
    picker = make_rng(2024, picker_stream)
    low, high = sink_range
    collected = []
    for stream in range(first_stream, first_stream + MAX_DRAWS):
        n = int(picker.integers(2, 13))
        m = int(picker.integers(1, min(4, n) + 1))
        cfg = GenConfig(
            n_points=n, m_sets=m, seed=2024, embed_dim=int(picker.integers(1, 4)),
            overlap_fraction=float(picker.uniform(0.0, 0.5)),
            map_mode=MapMode.SINK, sink_probability=float(picker.uniform(low, high)),
        )
        instance = random_cyclic_instance(cfg, stream=stream)
        if skip_constant and _is_constant(instance.self_map):
            continue
        cert = certify_cyclic_kannan(instance.space, instance.self_map, instance.rep)
        if cert.holds and cert.lambda_min <= LAMBDA_CAP:
            params = kannan_to_pata(reduction_lambda(cert.lambda_min))
            collected.append((instance, params))
            if len(collected) == quota:
                break
    return collected


def _draw_instances():
    nontrivial = _draw(0, (0.0, 0.6), NONTRIVIAL_QUOTA, skip_constant=True)
    rest = _draw(1, (0.6, 1.0), SUITE_SIZE - len(nontrivial), first_stream=MAX_DRAWS)
    return nontrivial + rest


@pytest.fixture(scope="module")
def certified():
    return _draw_instances()


@pytest.fixture(scope="module")
def solved(certified):
    return [
        (instance, params, solve(AnchoredSpace(instance.space, 0), instance.self_map,
                                 instance.rep, params))
        for instance, params in certified
    ]


def test_suite_is_large_and_nontrivial(certified, solved):
    assert len(certified) == SUITE_SIZE
    assert max(inst.space.size for inst, _ in certified) > 6
    assert min(inst.space.size for inst, _ in certified) >= 2
    non_constant = sum(not _is_constant(inst.self_map) for inst, _ in certified)
    assert non_constant >= NONTRIVIAL_QUOTA
    # traces where two positive steps are compared by the monotone-step check
    long_traces = sum(
        1 for _, _, report in solved for trace in report.traces
        if sum(step > 0 for step in trace.steps) >= 2
    )
    assert long_traces >= 20


def test_unique_fixed_point_in_intersection(solved):
    for instance, _, report in solved:
        n = instance.space.size
        assert report.certificate.holds
        assert report.unique
        assert report.in_intersection
        assert report.restriction_closed
        (fixed,) = report.fixed_points
        for trace in report.traces:
            assert trace.endpoint == fixed
            assert len(trace.steps) <= n


def test_reduction_holds_on_fine_grid(certified):
    grid = EpsilonGrid.uniform(1001)
    for instance, params in certified:
        cert = certify_cyclic_kannan_pata(AnchoredSpace(instance.space, 0), instance.self_map,
                                          instance.rep, params, grid)
        assert cert.holds
        assert cert.min_slack >= -cert.tolerance


def test_exhaustive_scan_agrees_with_traces(solved):
    for instance, _, report in solved:
        assert report.oracle_agrees
        assert find_fixed_points_exhaustive(instance.self_map) == report.trace_endpoints


def test_steps_never_increase(solved):
    for _, _, report in solved:
        tau = report.certificate.tolerance
        for trace in report.traces:
            assert trace.terminated == TerminationReason.FIXED_POINT
            assert trace.steps[-1] == 0.0
            for previous, current in zip(trace.steps, trace.steps[1:]):
                assert current <= previous + tau


def test_reanchoring_keeps_certificates(certified):
    for instance, params in certified[:100]:
        for anchor in range(1, instance.space.size):
            moved = params.with_lambda(reanchor_lambda(params, instance.space, 0, anchor))
            cert = certify_cyclic_kannan_pata(AnchoredSpace(instance.space, anchor),
                                              instance.self_map, instance.rep, moved)
            assert cert.holds


def test_boundedness_diagnostic_is_reported(solved):
    passed = failed = 0
    for _, _, report in solved:
        data = report.to_dict()["diagnostics"]
        assert math.isfinite(data["c_max"])
        assert data["bound_note"]
        passed += data["bound"]["passed"]
        failed += data["bound"]["failed"]
        iterates = sum(len(t.iterates) for t in report.traces)
        assert data["bound"]["passed"] + data["bound"]["failed"] == iterates
    assert passed > 0


def _random_instances(count, seed, map_mode=MapMode.UNIFORM):
    picker = make_rng(seed, 0)
    for stream in range(count):
        n = int(picker.integers(2, 9))
        cfg = GenConfig(n_points=n, m_sets=int(picker.integers(1, min(4, n) + 1)), seed=seed,
                        overlap_fraction=float(picker.uniform(0.0, 0.5)), map_mode=map_mode,
                        sink_probability=float(picker.uniform(0.0, 0.6)))
        yield random_cyclic_instance(cfg, stream=stream)


def test_cyclic_lambda_never_exceeds_global():
    for instance in _random_instances(300, seed=31):
        plain = certify_kannan(instance.space, instance.self_map)
        cyclic = certify_cyclic_kannan(instance.space, instance.self_map, instance.rep)
        assert cyclic.lambda_min <= plain.lambda_min
        if plain.holds:
            assert cyclic.holds


def test_grid_refinement_never_raises_min_slack(certified):
    fine = EpsilonGrid.uniform(101)
    coarse = EpsilonGrid(fine.values[::10])
    for instance, params in certified[:200]:
        anchored = AnchoredSpace(instance.space, 0)
        tight = params.with_lambda(params.Lambda / 4)
        on_fine = certify_cyclic_kannan_pata(anchored, instance.self_map, instance.rep,
                                             tight, fine)
        on_coarse = certify_cyclic_kannan_pata(anchored, instance.self_map, instance.rep,
                                               tight, coarse)
        assert on_fine.min_slack <= on_coarse.min_slack + 1e-12


def test_steps_never_increase_when_eps_zero_check_holds(e1):
    """Kannan ratio <= 1 on consecutive pairs (the ε = 0 check) already forces monotone steps"""
    swap = certify_cyclic_kannan(e1.space, e1.self_map, e1.rep)
    assert not swap.holds and swap.min_slack == 0.0
    assert iterate(e1.anchored, e1.self_map, e1.rep, 0).steps == [1.0, 1.0]

    checked = 0
    for instance in _random_instances(2000, seed=57, map_mode=MapMode.SINK):
        cert = certify_cyclic_kannan(instance.space, instance.self_map, instance.rep)
        if cert.min_slack < 0:
            continue
        checked += 1
        anchored = AnchoredSpace(instance.space, 0)
        tau = cert.tolerance
        for start in range(instance.space.size):
            trace = iterate(anchored, instance.self_map, instance.rep, start)
            for previous, current in zip(trace.steps, trace.steps[1:]):
                assert current <= previous + tau
    assert checked > 0
