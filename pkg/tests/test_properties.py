"""Randomized invariants."""

from hypothesis import given, settings, strategies as st

from charcalc.checks import check_self_intersection
from charcalc.classes import (
    BundleClass,
    ch_to_chern,
    chern_to_ch,
    chern_to_ch_by_roots,
    dual,
    lambda_minus_one,
    tensor_ch,
    todd,
    twist_by_line,
    whitney_sum,
)
from charcalc.graded_ring import exp, invert_unit, log1p
from charcalc.local_smith import LocalMatrix, LocalRing, diagonalize, divisor_sequence, fitting_generators, verify_smith
from charcalc.render import render
from charcalc.scenario import parse_element
from charcalc.snc import branch_relation, build_u_zeta, combine_alpha_sides, coordinate_hyperplanes, mu_series, structure_sheaf_ch
from charcalc.spaces import blowup, formal_space, projective_bundle, projective_space, sub_linear_space

small = st.fractions(min_value=-3, max_value=3, max_denominator=4)
SETTINGS = settings(max_examples=30, deadline=None)


def element(space, coeffs, min_degree=0):
    """Combination of the normal monomials of ``space`` with the given coefficients."""
    pres = space.presentation
    monos = pres.monomials(2 * space.dim, min_degree)
    return pres.element({m: c for m, c in zip(monos, coeffs)})


def coeff_lists(n=40):
    return st.lists(small, min_size=n, max_size=n)


def random_bundle(space, rank, coeffs):
    chern = []
    it = iter(coeffs)
    pres = space.presentation
    for i in range(1, min(rank, space.dim) + 1):
        monos = pres.monomials(2 * i, 2 * i)
        chern.append(pres.element({m: next(it) for m in monos}))
    return BundleClass(space, rank, tuple(chern))


FREE = formal_space(4, [("a", 2), ("b", 4)])


@SETTINGS
@given(coeff_lists(), coeff_lists(), coeff_lists())
def test_ring_axioms(ca, cb, cc):
    a, b, c = (element(FREE, x) for x in (ca, cb, cc))
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)


@SETTINGS
@given(coeff_lists(), coeff_lists())
def test_normal_forms_independent_of_order(ca, cb):
    X = projective_space(2)
    E = whitney_sum(BundleClass(X, 1, (X.gen("h"),)), BundleClass(X, 1, (X.gen("h") * 2,)))
    P, pi, a = projective_bundle(X, E)
    x, y = element(P, ca), element(P, cb)
    # reducing a product step by step or all at once gives the same element
    assert (x * y) * a == x * (y * a)
    assert (x * a) * (y * a) == (x * y) * (a * a)


@SETTINGS
@given(coeff_lists())
def test_exp_log_on_nilpotents(cx):
    x = element(FREE, cx, min_degree=2)
    assert exp(log1p(x)) == 1 + x


bundle_params = st.tuples(st.integers(1, 4), st.integers(1, 6), st.lists(small, min_size=120, max_size=120))


def generic_space(dim):
    return formal_space(dim, [("a", 2), ("b", 4), ("c", 6)])


@settings(max_examples=20, deadline=None)
@given(bundle_params)
def test_chern_ch_round_trip(p):
    rank, dim, coeffs = p
    X = generic_space(dim)
    E = random_bundle(X, rank, coeffs)
    assert ch_to_chern(chern_to_ch(E)).chern == E.chern
    assert chern_to_ch(E).ch == chern_to_ch_by_roots(E).ch


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.lists(small, min_size=120, max_size=120))
def test_whitney_and_tensor(r1, r2, coeffs):
    X = generic_space(4)
    E = random_bundle(X, r1, coeffs[:60])
    F = random_bundle(X, r2, coeffs[60:])
    S = whitney_sum(E, F)
    assert chern_to_ch(S).ch == chern_to_ch(E).ch + chern_to_ch(F).ch
    assert S.total() == E.total() * F.total()
    assert todd(S) == todd(E) * todd(F)
    L = BundleClass(X, 1, (X.gen("a") * coeffs[0],))
    assert chern_to_ch(twist_by_line(E, L)).ch == tensor_ch(chern_to_ch(E), chern_to_ch(L)).ch
    assert dual(dual(E)).chern == E.chern


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.lists(small, min_size=60, max_size=60))
def test_lambda_minus_one_identity(rank, coeffs):
    X = formal_space(4, [("a", 2), ("b", 4), ("c", 6), ("d", 8)])
    E = random_bundle(X, rank, coeffs)
    Ed = dual(E)
    assert lambda_minus_one(E).ch == Ed.top() * invert_unit(todd(Ed))


@SETTINGS
@given(st.integers(2, 4), st.data())
def test_projection_formula_linear_subspaces(n, data):
    P = projective_space(n)
    k = data.draw(st.integers(0, n - 1))
    Y = sub_linear_space(P, k)
    x = element(Y.sub, data.draw(coeff_lists()))
    y = element(P, data.draw(coeff_lists()))
    assert Y.pushforward(x * Y.restrict(y)) == Y.pushforward(x) * y
    assert check_self_intersection(Y, x).passed


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([(2, 0), (3, 0), (3, 1), (4, 1), (4, 2)]), st.data())
def test_blowup_projection_and_injectivity(case, data):
    n, k = case
    P = projective_space(n)
    Y = sub_linear_space(P, k)
    bl = blowup(P, Y)
    x = element(P, data.draw(coeff_lists()))
    ys = [element(Y.sub, data.draw(coeff_lists())) for _ in range(bl.d - 1)]
    z = bl.ring.from_components(x, ys)
    assert z.decompose() == (x, ys)
    w = element(P, data.draw(coeff_lists()))
    assert bl.p.push(z * bl.p.pull(w)) == bl.p.push(z) * w
    assert bl.p.push(bl.p.pull(w)) == w
    beta = element(bl.exceptional.sub, data.draw(coeff_lists()))
    assert bl.exceptional.push(beta * bl.exceptional.restrict(z)) == bl.exceptional.push(beta) * z


snc_cases = st.tuples(st.sampled_from([2, 3]), st.lists(st.integers(1, 3), min_size=1, max_size=3))


@settings(max_examples=25, deadline=None)
@given(snc_cases, st.lists(small, min_size=10, max_size=10))
def test_snc_invariants(case, coeffs):
    n, ms = case
    D = coordinate_hyperplanes(n, ms)
    assert D.S() * mu_series(D) == structure_sheaf_ch(D)
    u, zeta = build_u_zeta(D)
    for (i, j), z in zeta.items():
        assert (z + zeta[(j, i)]).is_zero()
    for i in range(len(D)):
        lhs, rhs = branch_relation(D, u, zeta, i)
        assert lhs == rhs
    ambient = element(D.ambient, coeffs)
    alphas = [B.restrict(ambient) for B in D.branches]
    lhs, rhs = combine_alpha_sides(D, alphas, u)
    assert lhs == rhs


@SETTINGS
@given(coeff_lists())
def test_render_round_trip(cx):
    P = projective_space(4, "g")
    x = element(P, cx)
    assert parse_element(render(x), P) == x


def unit_matrix(R, n, rnd):
    """Random matrix whose constant part is unit lower triangular, hence invertible."""
    x, y = R.var("x"), R.var("y")
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            c = 1 if i == j else rnd.randint(-2, 2) if i > j else 0
            row.append(c + rnd.randint(-2, 2) * x + rnd.randint(-2, 2) * y + rnd.randint(-1, 1) * x * y)
        rows.append(row)
    return LocalMatrix(R, rows)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.randoms(use_true_random=False))
def test_smith_recovers_planted_diagonal(n, rnd):
    R = LocalRing(["x", "y"], 10)
    exps, cur = [], [0, 0]
    for _ in range(n):
        cur = [cur[0] + rnd.randint(0, 1), cur[1] + rnd.randint(0, 1)]
        exps.append(tuple(cur))
    D = LocalMatrix.diagonal(R, [R.monomial(e) for e in exps])
    U, V = unit_matrix(R, n, rnd), unit_matrix(R, n, rnd)
    M = U @ D @ V
    res = diagonalize(M)
    assert res.diagonal_exponents == exps
    assert verify_smith(M, res).passed
    assert list(divisor_sequence(fitting_generators(M)).phi) == res.phi
