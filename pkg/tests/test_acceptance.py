"""Acceptance criteria: one test each, with its time limit.

Every test logs a single PASS/FAIL line, shown in the pytest summary under
"acceptance criteria".
"""

import random
from fractions import Fraction
from itertools import product
from math import comb, factorial
from time import perf_counter

from charcalc.checks import (
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
from charcalc.classes import (
    BundleClass,
    chern_to_ch,
    dual,
    lambda_minus_one,
    line_bundle,
    symmetric_apply,
    todd,
    trivial,
)
from charcalc.graded_ring import exp_series, invert_unit
from charcalc.local_smith import (
    LocalMatrix,
    LocalRing,
    PrincipalityViolation,
    diagonalize,
    divisor_sequence,
    fitting_generators,
    verify_smith,
)
from charcalc.report import is_zero
from charcalc.snc import build_u_zeta, combine_alpha_sides, coordinate_hyperplanes, pascal_defect, structure_sheaf_ch
from charcalc.spaces import (
    blowup,
    formal_space,
    generic_bundle,
    hyperplane_bundle,
    projective_space,
    sub_linear_space,
    tangent_bundle,
)


def run_criterion(log, name, limit, body):
    t0 = perf_counter()
    error = None
    try:
        body()
    except AssertionError as exc:
        error = exc
    elapsed = perf_counter() - t0
    ok = error is None and elapsed < limit
    detail = "" if error is None else f" ({error})"
    if error is None and not ok:
        detail = " (over time limit)"
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {elapsed:.3f}s, limit {limit}s{detail}"
    log.append(line)
    print(line)
    assert error is None, error
    assert elapsed < limit, f"{name} took {elapsed:.3f}s, limit {limit}s"


def O_on(Y, d):
    """O(d) on a linear subspace."""
    S = Y.sub
    if S.dim == 0:
        return trivial(S)
    return line_bundle(S, S.gen(S.generator_names[0]) * d)


LINEAR_CENTERS = [(n, k) for n in range(2, 5) for k in range(n) if n - k in (2, 3)]


def test_grr_for_linear_subspaces(acceptance_log):
    def body():
        count = 0
        for n in range(1, 5):
            P = projective_space(n)
            for k in range(n):
                Y = sub_linear_space(P, k)
                assert Y.koszul is not None
                for d in range(-3, 4):
                    rep = check_grr_immersion(Y, O_on(Y, d))
                    assert rep.passed, f"P{k} in P{n}, O({d})"
                    count += 1
        assert count == 70

    run_criterion(acceptance_log, "GRR for linear P^k in P^n, n <= 4, |d| <= 3", 1.0, body)


def binomial_oracle(n, d):
    """Euler characteristic of O(d) on P^n; Serre duality for negative d."""
    if d >= 0:
        return comb(n + d, n)
    if -d <= n:
        return 0
    return (-1) ** n * comb(-d - 1, n)


def test_hrr_on_projective_space(acceptance_log):
    def body():
        for n in range(0, 5):
            for d in range(-3, 6):
                rep = check_hrr_projective_space(n, d)
                assert rep.passed and rep.value == binomial_oracle(n, d), (n, d, rep.value)

    run_criterion(acceptance_log, "HRR on P^n, 0 <= n <= 4, -3 <= d <= 5", 1.0, body)


def test_excess_and_self_intersection(acceptance_log):
    def body():
        for n, k in LINEAR_CENTERS:
            P = projective_space(n)
            Y = sub_linear_space(P, k)
            bl = blowup(P, Y)
            for j in range(k + 1):
                a = Y.sub.gen("h_Y") ** j if k else Y.sub.one()
                assert check_excess_deligne(bl, a).passed, ("excess", n, k, j)
                assert check_self_intersection(Y, a).passed, ("self", n, k, j)
                E = bl.exceptional.sub
                for i in range(E.dim + 1):
                    for b in E.presentation.normal_monomials(2 * i):
                        beta = E.presentation.element({b: 1})
                        assert check_self_intersection(bl.exceptional, beta).passed

    run_criterion(acceptance_log, "excess and self-intersection on blowups of P^n along codim 2, 3 centers", 2.0, body)


def test_blowup_sanity(acceptance_log):
    def body():
        P2 = projective_space(2)
        bp = blowup(P2, sub_linear_space(P2, 0))
        assert bp.space.integrate(bp.e * bp.e) == -1
        for n, k in LINEAR_CENTERS:
            P = projective_space(n)
            Y = sub_linear_space(P, k)
            bl = blowup(P, Y)
            h = P.gen("h")
            for i in range(n + 1):
                assert bl.p.push(bl.p.pull(h**i)) == h**i
            # the decomposition has a left inverse on a basis, hence is injective
            ybasis = [Y.sub.presentation.element({m: 1}) for i in range(k + 1) for m in Y.sub.presentation.normal_monomials(2 * i)]
            zero_y = [Y.sub.zero()] * (bl.d - 1)
            for i in range(n + 1):
                assert bl.ring.from_components(h**i, zero_y).decompose() == (h**i, zero_y)
            for slot in range(bl.d - 1):
                for y in ybasis:
                    ys = list(zero_y)
                    ys[slot] = y
                    z = bl.ring.from_components(P.zero(), ys)
                    assert not z.is_zero()
                    assert z.decompose() == (P.zero(), ys)

    run_criterion(acceptance_log, "blowup sanity: e^2 = -1, p_* p^* = id, injective decomposition", 1.0, body)


def one_minus_exp_oracle(space, s):
    """1 - e^{-s h} from the factorial series."""
    h = space.gen("h")
    out = space.zero()
    for k in range(1, space.dim + 1):
        out = out + h**k * Fraction((-1) ** (k - 1) * s**k, factorial(k))
    return out


def test_snc_suite(acceptance_log):
    def body():
        for n in (2, 3):
            for N in range(1, 4):
                for ms in product(range(1, 4), repeat=N):
                    D = coordinate_hyperplanes(n, list(ms))
                    rep = check_snc(D)
                    assert rep.passed, (n, ms)
                    _, zeta = build_u_zeta(D)
                    assert all((z + zeta[(j, i)]).is_zero() for (i, j), z in zeta.items())
                    assert structure_sheaf_ch(D) == one_minus_exp_oracle(D.ambient, sum(ms))
                    h = D.ambient.gen("h")
                    alphas = [B.restrict(1 + 2 * h - h**2) for B in D.branches]
                    lhs, rhs = combine_alpha_sides(D, alphas)
                    assert lhs == rhs, (n, ms)
        fact = factorial
        for k in range(1, 13):
            for p in range(0, k):
                expected = fact(k - 1) // (fact(p + 1) * fact(k - 2 - p)) if p <= k - 2 else 0
                assert pascal_defect(k, p) == expected

    run_criterion(acceptance_log, "SNC suite, N <= 3 branches, multiplicities <= 3, P^2 and P^3", 2.0, body)


def test_deformation_suite(acceptance_log):
    def body():
        for n, k in ((1, 0), (2, 1), (3, 1)):
            X = projective_space(n)
            Y = sub_linear_space(X, k)
            for a in (-1, 0, 1):
                for b in ((0,) if k == 0 else (-1, 0, 1)):
                    rep = check_deformation_lemma(X, Y, hyperplane_bundle(X, a), O_on(Y, b))
                    assert rep.passed, (n, k, a, b, [p.name for p in rep.parts if not p.passed])
                    assert len(rep.parts) == 5
            if Y.codim == 1:
                for c in (-1, 0, 2):
                    G = hyperplane_bundle(X, c)
                    F, E = realizable_deformation_data(Y, G)
                    assert check_deformation_lemma(X, Y, F, E, G).passed, (n, k, c)

    run_criterion(acceptance_log, "deformation to the normal cone: (P1, pt), (P2, line), (P3, line)", 3.0, body)


def test_lambda_minus_one(acceptance_log):
    def body():
        rng = random.Random(4)
        P4 = projective_space(4)
        h = P4.gen("h")
        for r in range(1, 5):
            # fully symbolic Chern classes, then numeric ones on P^4
            specific = BundleClass(P4, r, tuple(h**i * rng.randint(-5, 5) for i in range(1, r + 1)))
            for E in (generic_bundle(4, r), specific):
                Ed = dual(E)
                assert lambda_minus_one(E).ch == Ed.top() * invert_unit(todd(Ed)), r

    run_criterion(acceptance_log, "ch of lambda_{-1}, ranks 1-4, symbolic and on P^4", 1.0, body)


def random_unit_matrix(R, n, rng):
    """Random matrix whose constant part is an invertible rational matrix."""
    x, y = R.var("x"), R.var("y")
    while True:
        C = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)]
        M = LocalMatrix(R, [[R.constant(c) for c in row] for row in C])
        if M.constant_det():
            break
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            e = R.constant(C[i][j])
            for _ in range(2):
                e = e + rng.randint(-2, 2) * x ** rng.randint(0, 2) * y ** rng.randint(1, 2)
            row.append(e)
        rows.append(row)
    return LocalMatrix(R, rows)


def planted_diagonal(n, rng):
    while True:
        cur, out = (0, 0), []
        for _ in range(n):
            cur = (cur[0] + rng.randint(0, 1), cur[1] + rng.randint(0, 1))
            out.append(cur)
        if sum(sum(d) for d in out) <= 12:
            return out


def test_local_smith(acceptance_log):
    def body():
        rng = random.Random(20240601)
        R = LocalRing(["x", "y"], 16)
        for trial in range(200):
            n = rng.randint(1, 4)
            exps = planted_diagonal(n, rng)
            D = LocalMatrix.diagonal(R, [R.monomial(e) for e in exps])
            M = random_unit_matrix(R, n, rng) @ D @ random_unit_matrix(R, n, rng)
            # elimination and Fitting ideals are run as separate routes
            res = diagonalize(M, check_fitting=False)
            assert res.diagonal_exponents == exps, trial
            assert verify_smith(M, res).passed, trial
            assert list(divisor_sequence(fitting_generators(M)).phi) == res.phi, trial
        x, y = R.var("x"), R.var("y")
        for a in range(1, 4):
            for b in range(1, 4):
                try:
                    diagonalize(LocalMatrix(R, [[x**a, y**b], [y**b, x**a]]))
                except PrincipalityViolation as exc:
                    assert exc.k == 1
                else:
                    raise AssertionError(f"no PrincipalityViolation for (x^{a}, y^{b})")

    run_criterion(acceptance_log, "local Smith form on 200 planted instances", 5.0, body)


def test_newton_against_roots(acceptance_log):
    def body():
        rng = random.Random(7)
        spaces = {dim: formal_space(dim, [("a", 2), ("b", 4), ("c", 6)]) for dim in range(1, 7)}
        for _ in range(100):
            rank = rng.randint(1, 4)
            X = spaces[rng.randint(1, 6)]
            pres = X.presentation
            chern = []
            for i in range(1, min(rank, X.dim) + 1):
                chern.append(pres.element({m: Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for m in pres.monomials(2 * i, 2 * i)}))
            E = BundleClass(X, rank, tuple(chern))
            assert chern_to_ch(E).ch == symmetric_apply(exp_series, E, "sum")

    run_criterion(acceptance_log, "Newton identities against Chern roots, 100 random bundles", 2.0, body)


def test_negative_controls(acceptance_log):
    def failing(rep):
        return not rep.passed and not is_zero(rep.discrepancy)

    def body():
        P2 = projective_space(2)
        L = sub_linear_space(P2, 1)
        P3 = projective_space(3)
        line3 = sub_linear_space(P3, 1)
        plane3 = sub_linear_space(P3, 2)
        bl3 = blowup(P3, line3)
        bp = blowup(P2, sub_linear_space(P2, 0))
        D = coordinate_hyperplanes(3, [1, 2, 3])
        h3 = D.ambient.gen("h")
        controls = {
            "grr": check_grr_immersion(L, trivial(L.sub), perturb=True),
            "hrr": check_hrr_projective_space(2, 1, perturb=True),
            "excess": check_excess_deligne(bl3, line3.sub.one(), perturb=True),
            "self_intersection": check_self_intersection(L, L.sub.one(), perturb=True),
            "whitney": check_whitney(tangent_bundle(P2), hyperplane_bundle(P2, 1), perturb=True),
            "k_theory immersion": check_k_theory_formulas(plane3, perturb=True),
            "k_theory blowup": check_k_theory_formulas(bl3, perturb=True),
            "deformation": check_deformation_lemma(P3, line3, trivial(P3), trivial(line3.sub), perturb=True),
            "divisor_pullback": check_divisor_pullback(bp, L, L.sub.one(), perturb=True),
            "snc": check_snc(D, perturb=True),
            "combine_alpha": check_combine_alpha(D, [B.restrict(1 + h3) for B in D.branches], perturb=True),
        }
        bad = [name for name, rep in controls.items() if not failing(rep)]
        assert not bad, f"perturbed checks that did not fail: {bad}"

    run_criterion(acceptance_log, "negative controls: every perturbed check fails", 5.0, body)
