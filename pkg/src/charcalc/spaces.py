"""Spaces with their cohomology rings, morphisms and Gysin data.

Constructors: a point, projective spaces, projective bundles, products with
P^1, linear subspaces of projective space, composites of immersions and
blowups along subvarieties with known normal bundle.

A blowup ring is stored as the module  A(X) + A(E)  where E = P(N) is the
exceptional divisor: the pair (x, beta) stands for p^*x + j_*beta.  Products
follow from the projection formula and j^*j_* = (multiplication by the first
Chern class xi of the normal bundle of E).  The pair is kept in a normal form
in which beta has no component along zeta^{d-1} (zeta = c_1(O(1)), d the
codimension); such a component is traded for p^*(i_* b) using the excess
intersection formula p^* i_* b = j_*(q^* b c_{d-1}(F^*)), where F^* is the
universal quotient bundle with total Chern class q^*c(N) / (1 + xi).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .classes import (
    BundleClass,
    dual,
    from_total_chern,
    line_bundle,
    pullback_bundle,
    trivial,
    whitney_sum,
)
from .graded_ring import (
    GradedElement,
    MissingNormalForm,
    OwnerMismatch,
    RingPresentation,
    as_rational,
    coefficient_of_last,
    extend_presentation,
    free_presentation,
    include_into,
    invert_unit,
    make_presentation,
    ring_map,
)


class MissingGysinData(ValueError):
    pass


class CodimTooSmall(ValueError):
    pass


class NoIntegral(ValueError):
    """The space has no fundamental class (a formal workspace)."""


class Space:
    """A smooth projective variety described by its rational cohomology ring.

    ``ring`` is a :class:`RingPresentation` or a :class:`BlowupRing`;
    ``integral`` maps an element to a rational.  Presentation rings are
    checked to have one-dimensional top degree and to kill every monomial
    just above the top degree.
    """

    def __init__(self, name: str, dim: int, ring, integral: Optional[Callable] = None, provenance=("custom",), validate: bool = True):
        self.name = name
        self.dim = dim
        self.ring = ring
        self._integral = integral
        self.provenance = tuple(provenance)
        if isinstance(ring, RingPresentation):
            if ring.truncation_degree != 2 * dim:
                raise ValueError("truncation degree must be twice the dimension")
            if validate:
                _validate_top(ring, dim)

    def __repr__(self):
        return f"Space({self.name}, dim={self.dim})"

    @property
    def presentation(self) -> Optional[RingPresentation]:
        return self.ring if isinstance(self.ring, RingPresentation) else None

    def one(self):
        return self.ring.one()

    def zero(self):
        return self.ring.zero()

    def scalar(self, q):
        return self.ring.scalar(q)

    def gen(self, name: str):
        if self.presentation is None:
            raise KeyError(f"{self.name} has no named generators")
        return self.ring.gen(name)

    @property
    def generator_names(self):
        return self.presentation.names if self.presentation is not None else ()

    def integrate(self, x) -> Fraction:
        if self._integral is None:
            raise NoIntegral(f"{self.name} has no fundamental class")
        return self._integral(x)

    def contains(self, x) -> bool:
        owner = getattr(x, "owner", None) or getattr(x, "ring", None)
        return owner is self.ring


def _validate_top(ring: RingPresentation, dim: int):
    top = 2 * dim
    if len(ring.normal_monomials(top)) != 1:
        raise MissingNormalForm(f"top degree {top} does not have exactly one normal monomial")
    if ring.ngens:
        wide = ring.with_truncation(top + max(ring.degrees))
        for m in wide.monomials(top + max(ring.degrees), top + 1):
            if wide.normal_form(m):
                raise MissingNormalForm(f"monomial {m} above the top degree does not reduce to zero")


@dataclass(eq=False)
class Morphism:
    source: Space
    target: Space
    pullback: Callable
    pushforward: Optional[Callable] = None
    name: str = "f"

    def pull(self, x):
        return self.pullback(x)

    def push(self, x):
        if self.pushforward is None:
            raise MissingGysinData(f"{self.name} has no pushforward")
        return self.pushforward(x)


@dataclass(eq=False)
class Immersion:
    """Closed immersion of ``sub`` into ``ambient`` with its Gysin data.

    ``koszul``, when given, is a bundle V on the ambient space with
    [O_sub] = sum (-1)^k [Lambda^k V] in K-theory; ``lift`` is a linear
    section of ``restrict``.  Both are optional and only used to compute
    Chern characters of pushed-forward sheaves without Grothendieck-Riemann-
    Roch.
    """

    sub: Space
    ambient: Space
    codim: int
    restrict: Callable
    pushforward: Callable
    normal: BundleClass
    cycle_class: object
    koszul: Optional[BundleClass] = None
    lift: Optional[Callable] = None
    name: str = "i"

    def __post_init__(self):
        for attr in ("restrict", "pushforward", "normal", "cycle_class"):
            if getattr(self, attr) is None:
                raise MissingGysinData(f"immersion {self.name} lacks {attr}")
        if self.normal.space is not self.sub or self.normal.rank != self.codim:
            raise MissingGysinData(f"normal bundle of {self.name} has the wrong space or rank")

    def push(self, y):
        return self.pushforward(y)

    def pull(self, x):
        return self.restrict(x)

    def as_morphism(self) -> Morphism:
        return Morphism(self.sub, self.ambient, self.restrict, self.pushforward, self.name)


# basic spaces


def point(name: str = "pt") -> Space:
    ring = make_presentation([], 0, [])
    return Space(name, 0, ring, lambda x: x.constant_term(), ("point",))


def projective_space(n: int, gen: str = "h", name: Optional[str] = None) -> Space:
    if n < 0:
        raise ValueError("dimension must be non-negative")
    ring = make_presentation([(gen, 2)], 2 * n, [({gen: n + 1}, 0)])
    top = ring.monomial({gen: n})
    return Space(name or f"P{n}", n, ring, lambda x: x.terms.get(top, Fraction(0)), ("proj", n))


def formal_space(dim: int, generators, name: str = "formal") -> Space:
    """Free polynomial ring truncated above degree 2*dim; no fundamental class.

    Used to hold generic (symbolic) Chern classes.
    """
    return Space(name, dim, free_presentation(generators, 2 * dim), None, ("formal",), validate=False)


def generic_bundle(dim: int, rank: int, prefix: str = "c") -> BundleClass:
    """A bundle whose Chern classes are free generators c1..c_m on a formal space."""
    m = min(rank, dim)
    X = formal_space(dim, [(f"{prefix}{i}", 2 * i) for i in range(1, m + 1)], name=f"generic{rank}")
    return BundleClass(X, rank, tuple(X.gen(f"{prefix}{i}") for i in range(1, m + 1)))


def tangent_bundle(P: Space) -> BundleClass:
    """Tangent bundle of a projective space: c(T) = (1 + h)^{n+1}."""
    if P.provenance[0] != "proj":
        raise ValueError("tangent bundle is only built in for projective spaces")
    n = P.dim
    h = P.gen(P.generator_names[0])
    return from_total_chern(P, n, (1 + h) ** (n + 1))


def hyperplane_bundle(P: Space, d: int = 1) -> BundleClass:
    """O(d) on a projective space."""
    if P.provenance[0] != "proj":
        raise ValueError("O(d) is only built in for projective spaces")
    return line_bundle(P, P.gen(P.generator_names[0]) * d)


def _require_presentation(X: Space):
    if X.presentation is None:
        raise ValueError(f"{X.name} is not given by a ring presentation")
    return X.presentation


def projective_bundle(X: Space, E: BundleClass, gen: str = "a", name: Optional[str] = None):
    """P(E) -> X with a = c_1(O(1)) and a^r + c_1 a^{r-1} + ... + c_r = 0.

    Returns ``(P, pi, a)``; ``pi.pushforward`` takes the coefficient of
    a^{r-1}.
    """
    base = _require_presentation(X)
    if E.space is not X:
        raise ValueError("bundle does not live on the base")
    r = E.rank
    if r < 1:
        raise ValueError("projective bundle needs positive rank")
    dim = X.dim + r - 1

    def rules(free):
        a = free.gen(gen)
        rhs = free.zero()
        for i in range(1, r + 1):
            ci = E.c(i)
            if not ci.is_zero():
                rhs = rhs - include_into(ci, free) * a ** (r - i)
        return [({gen: r}, rhs)]

    ring = extend_presentation(base, [(gen, 2)], 2 * dim, rules)

    def push(z):
        return coefficient_of_last(z, r - 1, base)

    P = Space(
        name or f"P({E.space.name})",
        dim,
        ring,
        lambda z: X.integrate(push(z)),
        ("projbundle", X, E),
    )
    pi = Morphism(P, X, lambda x: include_into(x, ring), push, name="pi")
    return P, pi, ring.gen(gen)


@dataclass(eq=False)
class ProductWithLine:
    """X x P^1 together with its projection and the fibres over 0 and infinity."""

    space: Space
    pr1: Morphism
    t: GradedElement
    fiber0: Immersion
    fiber_inf: Immersion

    def __iter__(self):
        return iter((self.space, self.pr1, self.t))


def product_p1(X: Space, gen: str = "t", name: Optional[str] = None) -> ProductWithLine:
    base = _require_presentation(X)
    ring = extend_presentation(base, [(gen, 2)], 2 * (X.dim + 1), lambda free: [({gen: 2}, 0)])
    t = ring.gen(gen)

    def push(z):
        return coefficient_of_last(z, 1, base)

    W = Space(name or f"{X.name}xP1", X.dim + 1, ring, lambda z: X.integrate(push(z)), ("product_p1", X))
    pr1 = Morphism(W, X, lambda x: include_into(x, ring), push, name="pr1")
    restrict = ring_map(ring, {**{n: X.gen(n) for n in base.names}, gen: X.zero()}, X.one())

    def fiber(label):
        return Immersion(
            sub=X,
            ambient=W,
            codim=1,
            restrict=restrict,
            pushforward=lambda x: t * include_into(x, ring),
            normal=trivial(X, 1),
            cycle_class=t,
            name=f"{X.name}x{label}",
        )

    return ProductWithLine(W, pr1, t, fiber("0"), fiber("inf"))


def sub_linear_space(P: Space, k: int, gen: Optional[str] = None, sub: Optional[Space] = None, name: Optional[str] = None) -> Immersion:
    """A linear P^k inside the projective space P (restriction h -> h_Y).

    Pushforward sends h_Y^j to h^{n-k+j}; the normal bundle is O(1)^{n-k};
    the Koszul bundle is O(-1)^{n-k}.
    """
    if P.provenance[0] != "proj":
        raise ValueError("linear subspaces are only built in for projective spaces")
    n = P.dim
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    h_name = P.generator_names[0]
    if sub is None:
        sub = projective_space(k, gen or f"{h_name}_Y", name=name or f"P{k}")
    elif sub.provenance != ("proj", k):
        raise ValueError("given subspace is not a projective space of the right dimension")
    hy_name = sub.generator_names[0]
    h = P.gen(h_name)
    hy = sub.gen(hy_name)
    c = n - k
    restrict = ring_map(P.ring, {h_name: hy}, sub.one())
    lift = ring_map(sub.ring, {hy_name: h}, P.one())

    def push(y):
        if y.owner is not sub.ring:
            raise OwnerMismatch("element does not live on the subspace")
        return P.ring.element({(m[0] + c,): v for m, v in y.terms.items()})

    return Immersion(
        sub=sub,
        ambient=P,
        codim=c,
        restrict=restrict,
        pushforward=push,
        normal=from_total_chern(sub, c, (1 + hy) ** c),
        cycle_class=h**c,
        koszul=from_total_chern(P, c, (1 - h) ** c),
        lift=lift,
        name=name or f"P{k}->P{n}",
    )


def compose_immersions(inner: Immersion, outer: Immersion, name: Optional[str] = None) -> Immersion:
    """Z -> Y -> X; the normal bundle is N_{Z/Y} + N_{Y/X}|_Z."""
    if inner.ambient is not outer.sub:
        raise ValueError("immersions do not compose")
    normal = whitney_sum(inner.normal, pullback_bundle(outer.normal, inner.restrict, inner.sub))
    lift = None
    if inner.lift is not None and outer.lift is not None:
        lift = lambda z: outer.lift(inner.lift(z))
    return Immersion(
        sub=inner.sub,
        ambient=outer.ambient,
        codim=inner.codim + outer.codim,
        restrict=lambda x: inner.restrict(outer.restrict(x)),
        pushforward=lambda z: outer.pushforward(inner.pushforward(z)),
        normal=normal,
        cycle_class=outer.pushforward(inner.cycle_class),
        lift=lift,
        name=name or f"{inner.name}.{outer.name}",
    )


def pullback_immersion_bundle(E: BundleClass, imm: Immersion) -> BundleClass:
    return pullback_bundle(E, imm.restrict, imm.sub)


# blowups


class BlowupRing:
    """Cohomology ring of the blowup of X along Y, as pairs (x, beta)."""

    def __init__(self, X: Space, center: Immersion, E: Space, d: int, zeta: GradedElement):
        self.X = X
        self.center = center
        self.Y = center.sub
        self.E = E
        self.d = d
        self.zeta = zeta
        self.xi = -zeta
        self.top = 2 * X.dim
        self._ybase = self.Y.presentation
        self._epres = E.presentation
        # q^* c_i(N) for i = 0..d
        self.cN = [self.q_star(center.normal.c(i)) for i in range(d + 1)]

    def q_star(self, y):
        return include_into(y, self._epres)

    def q_push(self, beta):
        return coefficient_of_last(beta, self.d - 1, self._ybase)

    def coefficient(self, beta, i):
        """b_i in the canonical form beta = sum_i q^*b_i zeta^i."""
        return coefficient_of_last(beta, i, self._ybase)

    def make(self, x, beta) -> "BlowupElement":
        if x.owner is not self.X.ring or beta.owner is not self._epres:
            raise OwnerMismatch("components live in the wrong rings")
        d = self.d
        b = self.coefficient(beta, d - 1)
        if not b.is_zero():
            x = x + self.center.pushforward(b)
            qb = self.q_star(b)
            rest = self.E.zero()
            for i in range(d - 1):
                rest = rest + self.cN[d - 1 - i] * self.zeta**i
            kept = GradedElement(self._epres, {m: c for m, c in beta.terms.items() if m[-1] != d - 1})
            beta = kept - qb * rest
        return BlowupElement(self, x, beta)

    def one(self):
        return BlowupElement(self, self.X.one(), self.E.zero())

    def zero(self):
        return BlowupElement(self, self.X.zero(), self.E.zero())

    def scalar(self, q):
        return BlowupElement(self, self.X.scalar(q), self.E.zero())

    def pull(self, x):
        """p^*"""
        return BlowupElement(self, x, self.E.zero())

    def push_exceptional(self, beta):
        """j_*"""
        return self.make(self.X.zero(), beta)

    def restrict_exceptional(self, z):
        """j^*"""
        self._check(z)
        return self.q_star(self.center.restrict(z.x)) + z.beta * self.xi

    def push_base(self, z):
        """p_*"""
        self._check(z)
        return z.x + self.center.pushforward(self.q_push(z.beta))

    def from_components(self, x, ys):
        """p^*x + sum_{i=1}^{d-1} j_*(q^*y_i xi^{i-1})."""
        if len(ys) != self.d - 1:
            raise ValueError(f"need {self.d - 1} components on the center")
        beta = self.E.zero()
        for i, y in enumerate(ys):
            beta = beta + self.q_star(y) * self.xi**i
        return self.make(x, beta)

    def _check(self, z):
        if not isinstance(z, BlowupElement) or z.ring is not self:
            raise OwnerMismatch("element does not belong to this blowup")


class BlowupElement:
    __slots__ = ("ring", "x", "beta")

    def __init__(self, ring: BlowupRing, x, beta):
        self.ring = ring
        self.x = x
        self.beta = beta

    @property
    def top(self):
        return self.ring.top

    def one(self):
        return self.ring.one()

    def zero(self):
        return self.ring.zero()

    def _coerce(self, other):
        if isinstance(other, BlowupElement):
            if other.ring is not self.ring:
                raise OwnerMismatch("elements belong to different blowups")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.ring.scalar(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return BlowupElement(self.ring, self.x + o.x, self.beta + o.beta)

    __radd__ = __add__

    def __neg__(self):
        return BlowupElement(self.ring, -self.x, -self.beta)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            q = as_rational(other)
            return BlowupElement(self.ring, self.x * q, self.beta * q)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        R = self.ring
        qx = R.q_star(R.center.restrict(self.x))
        qy = R.q_star(R.center.restrict(o.x))
        beta = qx * o.beta + qy * self.beta + self.beta * o.beta * R.xi
        return R.make(self.x * o.x, beta)

    __rmul__ = __mul__

    def __truediv__(self, q):
        if not isinstance(q, (int, Fraction)) or isinstance(q, bool):
            return NotImplemented
        return self * (1 / Fraction(q))

    def __pow__(self, k: int):
        out = self.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, BlowupElement):
            return self.ring is other.ring and self.x == other.x and self.beta == other.beta
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self == self.ring.scalar(other)
        return NotImplemented

    def __hash__(self):
        return hash((id(self.ring), self.x, self.beta))

    def __repr__(self):
        return f"BlowupElement({self.render()})"

    def render(self, latex: bool = False, names=("p", "j")) -> str:
        from .render import render

        p, j = names
        parts = []
        if not self.x.is_zero():
            parts.append(f"pull({p}, {render(self.x, latex)})")
        if not self.beta.is_zero():
            parts.append(f"push({j}, {render(self.beta, latex)})")
        return " + ".join(parts) if parts else "0"

    def is_zero(self) -> bool:
        return self.x.is_zero() and self.beta.is_zero()

    def degree_part(self, k: int):
        return BlowupElement(self.ring, self.x.degree_part(k), self.beta.degree_part(k - 2))

    def constant_term(self) -> Fraction:
        return self.x.constant_term()

    def decompose(self):
        """(x, [y_1..y_{d-1}]) with self = p^*x + sum j_*(q^*y_i xi^{i-1})."""
        R = self.ring
        ys = [R.coefficient(self.beta, i) * (-1) ** i for i in range(R.d - 1)]
        return self.x, ys


@dataclass(eq=False)
class BlowupData:
    """Blowup of X along Y: the space, p, the exceptional immersion j and q: E -> Y.

    Iterating yields ``(space, p, exceptional, q)``.
    """

    space: Space
    p: Morphism
    exceptional: Immersion
    q: Morphism
    center: Immersion
    ring: BlowupRing
    excess_dual: BundleClass = field(repr=False)
    excess: BundleClass = field(repr=False)

    def __iter__(self):
        return iter((self.space, self.p, self.exceptional, self.q))

    @property
    def d(self):
        return self.ring.d

    @property
    def xi(self):
        return self.ring.xi

    @property
    def zeta(self):
        return self.ring.zeta

    @property
    def e(self):
        """Class of the exceptional divisor."""
        return self.exceptional.cycle_class


def blowup(X: Space, Y: Immersion, zeta: str = "z", name: Optional[str] = None) -> BlowupData:
    if Y.ambient is not X:
        raise ValueError("center does not lie in X")
    if Y.codim < 2:
        raise CodimTooSmall("blowing up a divisor changes nothing; codimension must be at least 2")
    _require_presentation(Y.sub)
    d = Y.codim
    E, q_pi, z = projective_bundle(Y.sub, Y.normal, gen=zeta, name=f"E({Y.name})")
    R = BlowupRing(X, Y, E, d, z)
    B = Space(
        name or f"Bl({X.name},{Y.name})",
        X.dim,
        R,
        lambda w: X.integrate(w.x) + E.integrate(w.beta),
        ("blowup", X, Y),
    )
    p = Morphism(B, X, R.pull, R.push_base, name="p")
    j = Immersion(
        sub=E,
        ambient=B,
        codim=1,
        restrict=R.restrict_exceptional,
        pushforward=R.push_exceptional,
        normal=line_bundle(E, R.xi),
        cycle_class=R.push_exceptional(E.one()),
        name="j",
    )
    q = Morphism(E, Y.sub, q_pi.pullback, q_pi.pushforward, name="q")
    # universal quotient F^* = q^*N / O(-1); its top class c_d vanishes by the bundle relation
    Fd = from_total_chern(E, d - 1, pullback_bundle(Y.normal, q.pullback, E).total() * invert_unit(1 + R.xi))
    return BlowupData(B, p, j, q, Y, R, Fd, dual(Fd))
