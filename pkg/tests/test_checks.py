import pytest

from charcalc.checks import (
    NoIndependentLHS,
    ScenarioUnsupported,
    check_combine_alpha,
    check_deformation_lemma,
    check_divisor_pullback,
    check_excess_deligne,
    check_grr_immersion,
    check_hrr_projective_space,
    check_k_theory_formulas,
    check_self_intersection,
    check_snc,
    check_whitney,
    realizable_deformation_data,
)
from charcalc.classes import BundleClass, line_bundle, trivial
from charcalc.graded_ring import exp
from charcalc.snc import coordinate_hyperplanes
from charcalc.spaces import blowup, hyperplane_bundle, product_p1, projective_space, sub_linear_space, tangent_bundle


def line_in_plane():
    P2 = projective_space(2)
    return P2, sub_linear_space(P2, 1)


def twist_on(Y, d):
    return line_bundle(Y.sub, Y.sub.gen(Y.sub.generator_names[0]) * d) if Y.sub.dim else trivial(Y.sub)


def test_grr_point_on_line():
    P1 = projective_space(1)
    pt = sub_linear_space(P1, 0)
    rep = check_grr_immersion(pt, trivial(pt.sub))
    assert rep.passed
    assert rep.lhs == P1.gen("h") and rep.rhs == P1.gen("h")


def test_grr_line_in_plane():
    P2, L = line_in_plane()
    h = P2.gen("h")
    rep = check_grr_immersion(L, trivial(L.sub))
    assert rep.passed and rep.lhs == h - h**2 / 2
    for k in range(-3, 4):
        assert check_grr_immersion(L, twist_on(L, k)).passed


def test_grr_without_resolution_data():
    W = product_p1(projective_space(1))
    with pytest.raises(NoIndependentLHS):
        check_grr_immersion(W.fiber0, trivial(W.fiber0.sub))


def test_grr_negative_control():
    _, L = line_in_plane()
    rep = check_grr_immersion(L, trivial(L.sub), perturb=True)
    assert not rep.passed and not rep.discrepancy.is_zero()


def test_grr_twist_invariance():
    P3 = projective_space(3)
    Y = sub_linear_space(P3, 2)
    F = twist_on(Y, 2)
    for d in (-1, 1, 3):
        L = hyperplane_bundle(P3, d)
        twisted = line_bundle(Y.sub, F.c(1) + Y.restrict(L.c(1)))
        a = check_grr_immersion(Y, F)
        b = check_grr_immersion(Y, twisted)
        assert a.passed and b.passed
        assert b.rhs == a.rhs * exp(L.c(1))


def test_hrr_examples():
    assert check_hrr_projective_space(1, 0).value == 1
    assert check_hrr_projective_space(2, 1).value == 3
    assert check_hrr_projective_space(2, -3).value == 1
    assert not check_hrr_projective_space(2, 1, perturb=True).passed


def test_excess_examples():
    P3 = projective_space(3)
    bl = blowup(P3, sub_linear_space(P3, 1))
    assert check_excess_deligne(bl, bl.center.sub.one()).passed
    assert not check_excess_deligne(bl, bl.center.sub.one(), perturb=True).passed
    P2 = projective_space(2)
    bp = blowup(P2, sub_linear_space(P2, 0))
    rep = check_excess_deligne(bp, bp.center.sub.one())
    assert rep.passed
    cF = bp.q.pull(bp.center.normal.c(1)) - bp.xi
    assert bp.p.pull(P2.gen("h") ** 2) == bp.exceptional.push(cF)
    top = bl.center.sub.gen("h_Y")
    rep = check_excess_deligne(bl, top)
    assert rep.passed and rep.parts[2].lhs == P3.gen("h") ** 3


def test_self_intersection_examples():
    P2, L = line_in_plane()
    rep = check_self_intersection(L, L.sub.one())
    assert rep.passed and rep.lhs == L.sub.gen("h_Y")
    pt = sub_linear_space(P2, 0)
    rep = check_self_intersection(pt, pt.sub.one())
    assert rep.passed and rep.lhs.is_zero()
    rep = check_self_intersection(L, L.sub.gen("h_Y"))
    assert rep.passed and rep.lhs.is_zero()
    assert not check_self_intersection(L, L.sub.one(), perturb=True).passed


def test_k_theory_examples():
    P2, L = line_in_plane()
    pt = sub_linear_space(P2, 0)
    rep = check_k_theory_formulas(pt)
    assert rep.passed and rep.lhs.is_zero()
    rep = check_k_theory_formulas(L)
    hy = L.sub.gen("h_Y")
    assert rep.passed and rep.lhs == 1 - exp(-hy)
    assert check_k_theory_formulas(blowup(P2, pt)).passed
    P3 = projective_space(3)
    plane = sub_linear_space(P3, 2)
    assert check_k_theory_formulas(plane).passed
    assert not check_k_theory_formulas(plane, perturb=True).passed
    bl = blowup(P3, sub_linear_space(P3, 1))
    assert check_k_theory_formulas(bl).passed
    assert not check_k_theory_formulas(bl, perturb=True).passed
    with pytest.raises(ScenarioUnsupported):
        check_k_theory_formulas(P3)


def test_deformation_examples():
    P2, L = line_in_plane()
    rep = check_deformation_lemma(P2, L, trivial(P2), trivial(L.sub))
    assert rep.passed and rep.note == "virtual G"
    P1 = projective_space(1)
    pt = sub_linear_space(P1, 0)
    assert check_deformation_lemma(P1, pt, hyperplane_bundle(P1, 1), trivial(pt.sub)).passed
    empty = BundleClass(L.sub, 0, ())
    rep = check_deformation_lemma(P2, L, hyperplane_bundle(P2, 1), empty)
    assert rep.passed
    assert rep.parts[-1].lhs == rep.parts[-1].rhs


def test_deformation_with_extension():
    P2, L = line_in_plane()
    G = hyperplane_bundle(P2, 2)
    F, E = realizable_deformation_data(L, G)
    rep = check_deformation_lemma(P2, L, F, E, G)
    assert rep.passed and rep.note == "extension"
    wrong = hyperplane_bundle(P2, 3)
    assert not check_deformation_lemma(P2, L, F, E, wrong).passed


def test_deformation_negative_control():
    P2, L = line_in_plane()
    rep = check_deformation_lemma(P2, L, trivial(P2), trivial(L.sub), perturb=True)
    assert not rep.passed


def test_divisor_pullback():
    P2, L = line_in_plane()
    bl = blowup(P2, sub_linear_space(P2, 0))
    assert check_divisor_pullback(bl, L, L.sub.one()).passed
    assert check_divisor_pullback(bl, L, L.sub.gen("h_Y")).passed
    assert not check_divisor_pullback(bl, L, L.sub.one(), perturb=True).passed
    P3 = projective_space(3)
    other = blowup(P3, sub_linear_space(P3, 1))
    with pytest.raises(ScenarioUnsupported):
        check_divisor_pullback(other, sub_linear_space(P3, 2), P3.one())


def test_whitney_examples():
    P2 = projective_space(2)
    rep = check_whitney(hyperplane_bundle(P2, 1), hyperplane_bundle(P2, -1))
    assert rep.passed and rep.parts[1].lhs == 1 - P2.gen("h") ** 2
    T = tangent_bundle(P2)
    rep = check_whitney(T, BundleClass(P2, 0, ()))
    assert rep.passed and rep.parts[1].lhs == T.total()
    assert not check_whitney(T, hyperplane_bundle(P2, 1), perturb=True).passed


def test_snc_checks():
    for n, ms in ((2, [1, 1]), (2, [2, 3, 1]), (3, [3, 2])):
        assert check_snc(coordinate_hyperplanes(n, ms)).passed
        assert not check_snc(coordinate_hyperplanes(n, ms), perturb=True).passed


def test_combine_alpha_check():
    D = coordinate_hyperplanes(3, [1, 2])
    h = D.ambient.gen("h")
    alphas = [B.restrict(1 + h) for B in D.branches]
    assert check_combine_alpha(D, alphas).passed
    assert not check_combine_alpha(D, alphas, perturb=True).passed
