"""Identity checks, each comparing two independently computed sides.

Every check returns a :class:`CheckReport`.  The keyword ``perturb=True``
injects one deliberate error so that a test can confirm the check is able
to fail: checks that involve a Todd class replace one Todd factor by the
sign-flipped series x/(e^x - 1); the others flip the sign of the
characteristic class they test (documented per check).
"""

from fractions import Fraction
from math import factorial

from .classes import (
    BundleClass,
    KClass,
    SpaceMismatch,
    ch_to_chern,
    chern_to_ch,
    dual,
    lambda_minus_one,
    line_bundle,
    pullback_bundle,
    todd,
    torsion_ch,
    twist_by_line,
    whitney_sum,
)
from .graded_ring import exp, flipped_todd_series, invert_unit, ring_map
from .report import CheckReport
from .snc import (
    SNCDivisor,
    branch_relation,
    build_u_zeta,
    ch_torsion_on_branch,
    combine_alpha_sides,
    mu_series,
    structure_sheaf_ch,
)
from .spaces import (
    BlowupData,
    Immersion,
    blowup,
    compose_immersions,
    hyperplane_bundle,
    product_p1,
    projective_space,
    tangent_bundle,
)

__all__ = [
    "CheckReport",
    "NoIndependentLHS",
    "ScenarioUnsupported",
    "SpaceMismatch",
    "check_grr_immersion",
    "check_hrr_projective_space",
    "check_excess_deligne",
    "check_self_intersection",
    "check_whitney",
    "check_k_theory_formulas",
    "check_deformation_lemma",
    "check_divisor_pullback",
    "check_snc",
    "check_combine_alpha",
    "realizable_deformation_data",
]


class NoIndependentLHS(ValueError):
    """The scenario gives no resolution data, so the check cannot run."""


class ScenarioUnsupported(ValueError):
    pass


def _series(perturb):
    return flipped_todd_series if perturb else None


def _ch(x, space=None):
    if isinstance(x, BundleClass):
        x = chern_to_ch(x)
    if isinstance(x, KClass):
        if space is not None and x.space is not space:
            raise SpaceMismatch("class lives on the wrong space")
        return x
    raise TypeError("expected a BundleClass or KClass")


def check_grr_immersion(Y: Immersion, F, *, perturb: bool = False) -> CheckReport:
    """ch(i_! F) = i_*(ch(F) td(N)^{-1}).

    The left side uses the Koszul resolution of O_Y: for a lift z of ch(F)
    to the ambient space, ch(i_! F) = z * ch(sum (-1)^k Lambda^k V).  The
    right side uses the Todd class of the normal bundle.  ``perturb`` flips
    that Todd factor.
    """
    F = _ch(F, Y.sub)
    if Y.koszul is None or Y.lift is None:
        raise NoIndependentLHS(f"{Y.name} has no Koszul resolution")
    lhs = Y.lift(F.ch) * lambda_minus_one(Y.koszul).ch
    rhs = torsion_ch(Y, F.ch, _series(perturb))
    return CheckReport.compare(f"grr({Y.name})", lhs, rhs)


def hrr_expected(n: int, d: int) -> Fraction:
    """(d+1)(d+2)...(d+n)/n!, the Euler characteristic of O(d) on P^n."""
    num = 1
    for i in range(1, n + 1):
        num *= d + i
    return Fraction(num, factorial(n))


def check_hrr_projective_space(n: int, d: int, *, perturb: bool = False) -> CheckReport:
    """Integral of ch(O(d)) td(T) over P^n against the binomial polynomial.

    ``perturb`` flips the Todd class of the tangent bundle.
    """
    P = projective_space(n)
    value = P.integrate(chern_to_ch(hyperplane_bundle(P, d)).ch * todd(tangent_bundle(P), _series(perturb)))
    return CheckReport.compare(f"hrr(P{n}, O({d}))", value, hrr_expected(n, d), value=value)


def _excess_dual_total(bl: BlowupData, perturb: bool):
    N = pullback_bundle(bl.center.normal, bl.q.pullback, bl.exceptional.sub)
    if perturb:
        return N.total()
    return N.total() * invert_unit(1 + bl.xi)


def check_excess_deligne(bl: BlowupData, alpha, *, perturb: bool = False) -> CheckReport:
    """p^* i_* alpha = j_*(q^* alpha c_{d-1}(F^*)) on the blowup.

    Compared three ways: as elements of the blowup ring, after restriction
    to E (where the left side is q^*(alpha c_d(N)) by the self-intersection
    formula and the right side is computed in A(E)), and after pushforward
    to X.  ``perturb`` drops the factor 1/(1 + xi) from c(F^*).
    """
    Y = bl.center
    E = bl.exceptional.sub
    d = bl.d
    cF = _excess_dual_total(bl, perturb).degree_part(2 * (d - 1))
    qa = bl.q.pullback(alpha)
    slot = CheckReport.compare("slots", bl.p.pullback(Y.pushforward(alpha)), bl.exceptional.pushforward(qa * cF))
    restricted = CheckReport.compare(
        "restriction to E",
        bl.q.pullback(alpha * Y.normal.c(d)),
        qa * cF * bl.xi,
    )
    pushed = CheckReport.compare("pushforward to X", Y.pushforward(alpha), Y.pushforward(alpha * bl.q.pushforward(cF)))
    if E is not bl.exceptional.sub:
        raise SpaceMismatch("exceptional divisor mismatch")
    return CheckReport.combine(f"excess({Y.name})", [slot, restricted, pushed])


def check_self_intersection(Y: Immersion, alpha, *, perturb: bool = False) -> CheckReport:
    """i^* i_* alpha = alpha c_d(N).  ``perturb`` flips the sign of c_d(N)."""
    lhs = Y.restrict(Y.pushforward(alpha))
    top = Y.normal.c(Y.codim)
    rhs = alpha * (-top if perturb else top)
    return CheckReport.compare(f"self_intersection({Y.name})", lhs, rhs)


def check_whitney(E: BundleClass, F: BundleClass, *, perturb: bool = False) -> CheckReport:
    """ch(E + F) = ch E + ch F and c(E + F) = c(E) c(F), through Newton's identities.

    The first part converts the product of total Chern classes to a Chern
    character; the second converts the sum of Chern characters back to
    Chern classes.  ``perturb`` replaces F by its dual inside the sum.
    """
    if E.space is not F.space:
        raise SpaceMismatch("bundles live on different spaces")
    S = whitney_sum(E, dual(F) if perturb else F)
    chsum = chern_to_ch(E).ch + chern_to_ch(F).ch
    part1 = CheckReport.compare("ch additive", chern_to_ch(S).ch, chsum)
    part2 = CheckReport.compare(
        "c multiplicative",
        S.total(),
        ch_to_chern(KClass(E.space, E.rank + F.rank, chsum)).total(),
    )
    return CheckReport.combine("whitney", [part1, part2])


def check_k_theory_formulas(target, x=None, *, perturb: bool = False) -> CheckReport:
    """K-theoretic self-intersection and blowup formulas at the level of ch.

    For an immersion i: ch(i^! i_! x) = ch(x) ch(sum (-1)^k Lambda^k N^*),
    the left side via GRR for i and the right side from explicit exterior
    powers.  For a blowup: ch(p^! i_! x) = ch(j_!(q^! x  Lambda_{-1} F)),
    both sides via GRR, with F the excess bundle.  ``perturb`` flips the
    Todd factor of the normal bundle of Y.  For an immersion the flip only
    shows when c_1(N) c_d(N) is nonzero on Y, so dim Y must exceed the
    codimension; for a blowup it is invisible when Y is a point.
    """
    series = _series(perturb)
    if isinstance(target, Immersion):
        Y = target
        x = _ch(x, Y.sub) if x is not None else KClass(Y.sub, 1, Y.sub.one())
        lhs = Y.restrict(torsion_ch(Y, x.ch, series))
        rhs = x.ch * lambda_minus_one(dual(Y.normal)).ch
        return CheckReport.compare(f"k_theory({Y.name})", lhs, rhs)
    if isinstance(target, BlowupData):
        bl = target
        Y = bl.center
        x = _ch(x, Y.sub) if x is not None else KClass(Y.sub, 1, Y.sub.one())
        lhs = bl.p.pullback(torsion_ch(Y, x.ch, series))
        payload = bl.q.pullback(x.ch) * lambda_minus_one(bl.excess).ch
        rhs = torsion_ch(bl.exceptional, payload)
        return CheckReport.compare(f"k_theory(blowup {Y.name})", lhs, rhs)
    raise ScenarioUnsupported("expected an immersion or a blowup")


def realizable_deformation_data(Y: Immersion, G: BundleClass):
    """(F, E) = (G(-Y), G|_Y) for a hypersurface Y, so that 0 -> F -> G -> i_*E -> 0."""
    if Y.codim != 1:
        raise ScenarioUnsupported("G(-Y) is only built for hypersurfaces")
    X = Y.ambient
    F = twist_by_line(G, line_bundle(X, -Y.cycle_class))
    E = pullback_bundle(G, Y.restrict, Y.sub)
    return F, E


def check_deformation_lemma(X, Y: Immersion, F, E, G=None, *, perturb: bool = False) -> CheckReport:
    """Deformation of G to F + i_*E over P^1, and its consequence for ch.

    On M = Bl_{Y x 0}(X x P^1) with exceptional divisor E_M the class

        alpha = ch(G(1)) - ch(O_{E_M} tensor q^*E) + ch(L),
        ch(L) = (i_{E_M})_*(q^*ch(E) (1 - ch Lambda_{-1} F_exc) td(N)^{-1}),

    (for Y a hypersurface, L = q^*E tensor F_exc) is checked to be pulled
    back from X x P^1, to restrict on E_M to
    q^*[ch(F)|_Y + ch(E) ch(Lambda_{-1} N^*_{Y/X})], and to restrict on
    the strict transform D of X x 0 to ch(F) + ch(i_*E).  Then
    ch(G) = ch(F) + ch(i_*E), with ch(i_*E) = i_*(ch(E) td(N)^{-1}).

    ``G`` should be a genuine extension of i_*E by F; when omitted the
    check uses the virtual class ch(F) + ch(i_*E) for ch(G).
    ``perturb`` flips the Todd factor in ch(i_*E) on the right sides.
    """
    if Y.ambient is not X:
        raise SpaceMismatch("Y does not lie in X")
    if X.presentation is None or Y.sub.presentation is None:
        raise ScenarioUnsupported("the deformation space needs presented rings")
    chF = _ch(F, X).ch
    chE = _ch(E, Y.sub).ch
    ch_H = torsion_ch(Y, chE)
    ch_H_rhs = torsion_ch(Y, chE, _series(perturb))
    chG = _ch(G, X).ch if G is not None else chF + ch_H
    mode = "extension" if G is not None else "virtual G"

    W = product_p1(X)
    Y0 = compose_immersions(Y, W.fiber0, name=f"{Y.name}x0")
    zeta = _fresh_name("z", Y.sub.generator_names)
    bl = blowup(W.space, Y0, zeta=zeta)
    jE, q, sigma = bl.exceptional, bl.q, bl.p
    tdN_inv = invert_unit(todd(jE.normal))
    qchE = q.pullback(chE)
    alpha = (
        sigma.pullback(W.pr1.pullback(chG) * exp(W.t))
        - jE.pushforward(qchE * tdN_inv)
        + jE.pushforward(qchE * (1 - lambda_minus_one(bl.excess).ch) * tdN_inv)
    )

    base, ys = alpha.decompose()
    descent = CheckReport.compare("pulled back from X x P1", ys, [y.zero() for y in ys])

    lam_conormal = lambda_minus_one(dual(Y.normal)).ch
    on_E = CheckReport.compare(
        "restriction to exceptional divisor",
        jE.restrict(alpha),
        q.pullback(Y.restrict(chF) + chE * lam_conormal),
    )

    if Y.codim == 1:
        n1 = Y.normal.c(1)
        images = {g: Y.sub.gen(g) for g in Y.sub.generator_names}
        images[zeta] = -n1
        s_star = ring_map(jE.sub.presentation, images, Y.sub.one())
        restricted = W.fiber0.restrict(alpha.x) + Y.pushforward(s_star(alpha.beta))
        expected = chF + ch_H_rhs
    else:
        D = blowup(X, Y, zeta=zeta)
        images = {g: D.exceptional.sub.gen(g) for g in jE.sub.generator_names}
        r_star = ring_map(jE.sub.presentation, images, D.exceptional.sub.one())
        restricted = D.p.pullback(W.fiber0.restrict(alpha.x)) + D.exceptional.pushforward(r_star(alpha.beta))
        expected = D.p.pullback(chF + ch_H_rhs)
    on_D = CheckReport.compare("restriction to strict transform of X x 0", restricted, expected)

    at_infinity = CheckReport.compare("restriction to X x inf", W.fiber_inf.restrict(base), chG)
    corollary = CheckReport.compare("ch(G) = ch(F) + ch(i_*E)", chG, chF + ch_H_rhs)
    return CheckReport.combine(
        f"deformation({X.name}, {Y.name})",
        [descent, on_E, on_D, at_infinity, corollary],
        note=mode,
    )


def _fresh_name(base, taken):
    name = base
    k = 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def check_divisor_pullback(bl: BlowupData, D: Immersion, alpha, *, perturb: bool = False) -> CheckReport:
    """p^*(i_{D*} alpha) = i_{D~*}(alpha) + j_*(q^*(alpha|_Y)) for a point Y on a line D in P^2.

    D~ is the strict transform of D.  Only this configuration is built in.
    ``perturb`` doubles the exceptional term.
    """
    X = bl.center.ambient
    if not (
        X.provenance == ("proj", 2)
        and bl.center.sub.dim == 0
        and D.ambient is X
        and D.sub.provenance == ("proj", 1)
    ):
        raise ScenarioUnsupported("only a point on a line in P^2 is built in")
    strict = _strict_transform_of_line(bl, D)
    mult = 2 if perturb else 1
    lhs = bl.p.pullback(D.pushforward(alpha))
    rhs = strict.pushforward(alpha) + bl.exceptional.pushforward(bl.exceptional.sub.one() * (alpha.constant_term() * mult))
    return CheckReport.compare("divisor_pullback", lhs, rhs)


def _strict_transform_of_line(bl: BlowupData, D: Immersion) -> Immersion:
    """Strict transform of a line through the blown-up point of P^2 (self-intersection 0)."""
    X = bl.center.ambient
    L = D.sub
    h = X.gen(X.generator_names[0])
    hl = L.gen(L.generator_names[0])
    B = bl.space
    e = bl.e
    cls = bl.p.pullback(h) - e
    point = bl.p.pullback(h * h)

    def restrict(z):
        return D.restrict(z.x) + hl * z.beta.constant_term()

    def push(a):
        return cls * a.constant_term() + point * a.coefficient(L.generator_names[0])

    return Immersion(L, B, 1, restrict, push, line_bundle(L, L.zero()), cls, name="strict transform")


def check_snc(D: SNCDivisor, *, perturb: bool = False) -> CheckReport:
    """Relations for the decomposition of O_D into sheaves on the branches.

    Parts: S mu = 1 - e^{-S}; sum of ch((i_{D_i})_* u_i) = ch(O_D); and the
    relation on every branch with the zeta corrections.  ``perturb`` flips
    the Todd factors of the normal bundles.
    """
    series = _series(perturb)
    u, zeta = build_u_zeta(D)
    parts = [CheckReport.compare("S mu = 1 - exp(-S)", D.S() * mu_series(D), structure_sheaf_ch(D))]
    total = D.ambient.zero()
    for t in u:
        total = total + ch_torsion_on_branch(t, series)
    parts.append(CheckReport.compare("sum of branch characters", total, structure_sheaf_ch(D)))
    for i in range(len(D)):
        lhs, rhs = branch_relation(D, u, zeta, i, series)
        parts.append(CheckReport.compare(f"branch {i + 1}", lhs, rhs))
    ms = ",".join(str(m) for m in D.multiplicities)
    return CheckReport.combine(f"snc(P{D.ambient.dim}; {ms})", parts)


def check_combine_alpha(D: SNCDivisor, alphas, *, perturb: bool = False) -> CheckReport:
    """Gluing identity for compatible classes on the branches.

    ``perturb`` flips the Todd factors of the normal bundles.
    """
    lhs, rhs = combine_alpha_sides(D, alphas, series=_series(perturb))
    return CheckReport.compare("combine_alpha", lhs, rhs, value=rhs)
