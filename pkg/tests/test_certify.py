import dataclasses

import numpy as np
import pytest

from core.certify import (
    certify, certify_chakraborty_samanta, certify_cyclic_kannan, certify_cyclic_kannan_pata,
    certify_kannan, certify_kannan_pata, certify_pata_banach, kannan_to_pata,
    lambda_threshold, reanchor_lambda, reduction_lambda, rhs_cyclic,
)
from core.conditions import ConditionType, EpsilonGrid, PataParams, PataCondition, PsiSpec
from core.cyclic import CyclicError, CyclicRepresentation, SelfMap
from core.metric_space import AnchoredSpace, FiniteMetricSpace
from core.settings import ParameterError, StructuralError


def params(Lambda, alpha=1.0, beta=1.0):
    return PataParams(Lambda, alpha, beta, PsiSpec("power", 1.0, 1.0))


def test_kannan_constant_map_holds(e2):
    cert = certify_kannan(e2.space, e2.self_map)
    assert cert.holds
    assert cert.lambda_min == 0.0
    assert cert.witness is None
    assert cert.pairs_checked == 9


def test_kannan_swap_fails_at_one(e1):
    cert = certify_kannan(e1.space, e1.self_map)
    assert not cert.holds
    assert cert.lambda_min == 1.0
    assert (cert.witness.x, cert.witness.y) == (0, 1)
    assert cert.witness.eps is None


def test_kannan_e3(e3):
    cert = certify_kannan(e3.space, e3.self_map)
    assert cert.holds
    assert cert.lambda_min == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert cert.min_slack == pytest.approx(1.0 / 3.0)


def test_cyclic_kannan_e3(e3):
    cert = certify_cyclic_kannan(e3.space, e3.self_map, e3.rep)
    assert cert.holds
    assert cert.lambda_min == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert cert.pairs_checked == 8
    assert cert.condition == ConditionType.CYCLIC_KANNAN


def test_cyclic_kannan_e1_fails(e1):
    cert = certify_cyclic_kannan(e1.space, e1.self_map, e1.rep)
    assert not cert.holds
    assert cert.lambda_min == 1.0


def test_cyclic_kannan_single_set_matches_kannan(e3):
    plain = certify_kannan(e3.space, e3.self_map)
    cyclic = certify_cyclic_kannan(e3.space, e3.self_map, CyclicRepresentation.trivial(3))
    assert dataclasses.replace(cyclic, condition=plain.condition) == plain


def test_cyclic_kannan_needs_valid_representation(e3):
    with pytest.raises(CyclicError):
        certify_cyclic_kannan(e3.space, SelfMap([0, 1, 0]), e3.rep)


def test_zero_movement_with_positive_image_distance_fails():
    space = FiniteMetricSpace.from_matrix([[0, 1], [1, 0]])
    cert = certify_kannan(space, SelfMap([0, 1]))
    assert not cert.holds
    assert cert.min_slack == -1.0


def test_rhs_cyclic_endpoints(e3):
    p = params(3.0)
    assert rhs_cyclic(0, 2, 0.0, p, e3.anchored, e3.self_map) == pytest.approx(2.0)
    # bracket 1 + ‖p0‖ + ‖p1‖ + ‖p2‖ + ‖p0‖ = 5
    assert rhs_cyclic(0, 2, 1.0, p, e3.anchored, e3.self_map) == pytest.approx(15.0)
    with pytest.raises(ParameterError):
        rhs_cyclic(0, 2, 1.5, p, e3.anchored, e3.self_map)


def test_ck_pata_constant_map_holds_without_lambda(e2):
    cert = certify_cyclic_kannan_pata(e2.anchored, e2.self_map, e2.rep, params(0.0))
    assert cert.holds
    assert cert.min_slack >= 0.0
    assert cert.eps_checked == 101


def test_ck_pata_e1_fails_at_eps_one(e1):
    cert = certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, params(0.0))
    assert not cert.holds
    w = cert.witness
    assert (w.x, w.y, w.i, w.eps) == (0, 1, 1, 1.0)
    assert w.lhs == 1.0
    assert w.rhs == 0.0
    assert w.to_dict()["i"] == 0


@pytest.mark.parametrize("Lambda", [0.0, 1.0, 10.0])
def test_e1_fails_every_certifier(e1, Lambda):
    assert certify_kannan(e1.space, e1.self_map).lambda_min >= 1.0
    assert certify_cyclic_kannan(e1.space, e1.self_map, e1.rep).lambda_min >= 1.0
    cert = certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, params(Lambda))
    assert not cert.holds
    assert cert.witness is not None


def test_e1_lambda_threshold(e1):
    threshold = lambda_threshold(e1.anchored, e1.self_map, e1.rep, 1.0, 1.0, PsiSpec())
    assert threshold == pytest.approx(100.0 / 3.0, rel=1e-9)
    above = certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, params(threshold * 1.001))
    below = certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, params(threshold * 0.99))
    assert above.holds
    assert not below.holds


def test_lambda_threshold_zero_for_constant_map(e2):
    assert lambda_threshold(e2.anchored, e2.self_map, e2.rep, 1.0, 1.0, PsiSpec()) == 0.0


def test_monotone_in_lambda(e1):
    outcomes = [
        certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, params(L)).holds
        for L in (0.0, 10.0, 30.0, 40.0, 50.0, 1000.0)
    ]
    assert outcomes == sorted(outcomes)
    assert outcomes[-1]


def test_e3_reduction_holds_on_fine_grid(e3):
    p = kannan_to_pata(2.0 / 3.0)
    for grid in (EpsilonGrid.uniform(101), EpsilonGrid.uniform(1001)):
        cert = certify_cyclic_kannan_pata(e3.anchored, e3.self_map, e3.rep, p, grid)
        assert cert.holds
        assert cert.min_slack >= -cert.tolerance


def test_single_set_kannan_pata_matches_cyclic(e3):
    p = params(2.0)
    plain = certify_kannan_pata(e3.anchored, e3.self_map, p)
    cyclic = certify_cyclic_kannan_pata(e3.anchored, e3.self_map,
                                        CyclicRepresentation.trivial(3), p)
    assert plain.condition == ConditionType.KANNAN_PATA
    assert cyclic.condition == ConditionType.CYCLIC_KANNAN_PATA
    # every field but the condition tag agrees
    plain_fields = plain.to_dict()
    cyclic_fields = cyclic.to_dict()
    assert plain_fields.pop("condition") == "cs"
    assert cyclic_fields.pop("condition") == "ck-pata"
    assert plain_fields == cyclic_fields
    assert certify_chakraborty_samanta is certify_kannan_pata


def test_kannan_pata_e1_and_e2(e1, e2):
    assert certify_kannan_pata(e2.anchored, e2.self_map, params(0.0)).holds
    cert = certify_kannan_pata(e1.anchored, e1.self_map, params(0.0))
    assert not cert.holds
    assert cert.witness.eps == 1.0


def test_pata_single_point_identity_holds():
    space = FiniteMetricSpace.from_matrix([[0.0]])
    cert = certify_pata_banach(AnchoredSpace(space), SelfMap([0]), params(0.0))
    assert cert.holds


def test_pata_identity_fails_at_eps_one(e3):
    cert = certify_pata_banach(e3.anchored, SelfMap.identity(3), params(0.0))
    assert not cert.holds
    assert cert.witness.eps == 1.0


def test_pata_swap_and_constant(e1):
    assert not certify_pata_banach(e1.anchored, e1.self_map, params(0.0)).holds
    assert certify_pata_banach(e1.anchored, SelfMap([1, 1]), params(0.0)).holds


def test_pata_rejects_beta_above_alpha():
    with pytest.raises(ParameterError):
        PataCondition(params(1.0, alpha=1.0, beta=2.0))


def test_grid_refinement_catches_more(e1):
    # on a coarse grid the smallest positive ε is 0.5
    coarse = EpsilonGrid.uniform(3)
    p = params(1.0)
    assert certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, p, coarse).holds
    assert not certify_cyclic_kannan_pata(e1.anchored, e1.self_map, e1.rep, p).holds


@pytest.mark.parametrize("lam, expected", [(2.0 / 3.0, 3.0), (0.5, 2.0), (1e-9, 1.0)])
def test_kannan_to_pata(lam, expected):
    p = kannan_to_pata(lam)
    assert p.Lambda == pytest.approx(expected)
    assert (p.alpha, p.beta) == (1.0, 1.0)
    assert p.psi(0.25) == pytest.approx(0.25)


@pytest.mark.parametrize("lam", [0.0, 1.0, -0.5, 2.0])
def test_kannan_to_pata_rejects_out_of_range(lam):
    with pytest.raises(ParameterError):
        kannan_to_pata(lam)


def test_reduction_lambda():
    assert reduction_lambda(0.0) == 0.5
    assert reduction_lambda(0.25) == 0.25
    with pytest.raises(ParameterError):
        reduction_lambda(1.0)


def test_reanchor_lambda(e3):
    p = params(3.0, beta=2.0)
    assert reanchor_lambda(p, e3.space, 0, 0) == 3.0
    assert reanchor_lambda(p, e3.space, 0, 2) == pytest.approx(3.0 * 49.0)


def test_reanchored_reduction_still_holds(e3):
    p = kannan_to_pata(2.0 / 3.0)
    for anchor in range(3):
        moved = p.with_lambda(reanchor_lambda(p, e3.space, 0, anchor))
        cert = certify_cyclic_kannan_pata(e3.anchored.reanchored(anchor), e3.self_map,
                                          e3.rep, moved)
        assert cert.holds


def test_dispatch(e3):
    p = kannan_to_pata(2.0 / 3.0)
    assert certify(ConditionType.KANNAN, e3.anchored, e3.self_map).holds
    assert certify(ConditionType.CYCLIC_KANNAN_PATA, e3.anchored, e3.self_map, e3.rep, p).holds
    with pytest.raises(StructuralError):
        certify(ConditionType.CYCLIC_KANNAN_PATA, e3.anchored, e3.self_map, params=p)
    with pytest.raises(StructuralError):
        certify(ConditionType.KANNAN_PATA, e3.anchored, e3.self_map)


def test_map_size_mismatch_is_structural(e3):
    with pytest.raises(StructuralError):
        certify_kannan(e3.space, SelfMap([0, 0]))


def test_certificate_to_dict(e1):
    data = certify_kannan(e1.space, e1.self_map).to_dict()
    assert data["condition"] == "kannan"
    assert data["holds"] is False
    assert data["witness"]["x"] == 0
    assert np.isfinite(data["tolerance"])
