"""Chern classes, Chern characters and Todd classes of bundles.

A :class:`BundleClass` stores rank and Chern classes ``c_1..c_m`` with
``m = min(rank, dim)``; higher classes vanish, either because the rank is
exceeded or because their degree is above the top degree.  A :class:`KClass`
stores rank and Chern character, so it also represents virtual classes.

Two independent routes relate the two descriptions: Newton's identities
between power sums and elementary symmetric functions, and expansion in
formal Chern roots followed by rewriting in elementary symmetric
polynomials.  The root route is also used for Todd classes and for the
alternating sum of exterior powers.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Dict, Sequence, Tuple

from .graded_ring import (
    DegreeMismatch,
    apply_series,
    exp_series,
    free_presentation,
    invert_unit,
    todd_series,
)

DEFAULT_ROOT_BOUND = 8


class NegativeRank(ValueError):
    pass


class RootBoundExceeded(ValueError):
    pass


class NonSymmetricResult(ValueError):
    pass


class SpaceMismatch(ValueError):
    pass


class NotABundleClass(ValueError):
    """A Chern character whose Chern classes do not stop at the rank."""


def _same_space(*objs):
    s = objs[0].space
    for o in objs[1:]:
        if o.space is not s:
            raise SpaceMismatch("classes live on different spaces")
    return s


@dataclass(frozen=True, eq=False)
class BundleClass:
    space: object
    rank: int
    chern: Tuple

    def __post_init__(self):
        if self.rank < 0:
            raise NegativeRank(f"rank {self.rank}")
        m = min(self.rank, self.space.dim)
        chern = tuple(self.chern)
        for i, c in enumerate(chern, start=1):
            if i > m:
                if not c.is_zero():
                    raise ValueError(f"c_{i} must vanish for a rank {self.rank} bundle")
                continue
            if c.degree_part(2 * i) != c:
                raise DegreeMismatch(f"c_{i} is not of degree {2 * i}")
        chern = chern[:m] + tuple(self.space.zero() for _ in range(m - len(chern)))
        object.__setattr__(self, "chern", chern)

    def c(self, i: int):
        if i == 0:
            return self.space.one()
        if 1 <= i <= len(self.chern):
            return self.chern[i - 1]
        return self.space.zero()

    def total(self):
        out = self.space.one()
        for c in self.chern:
            out = out + c
        return out

    def top(self):
        """c_rank, the top Chern class."""
        return self.c(self.rank)

    def __repr__(self):
        return f"BundleClass(rank={self.rank}, chern={list(self.chern)!r})"


@dataclass(frozen=True, eq=False)
class KClass:
    """A (possibly virtual) class recorded by rank and Chern character."""

    space: object
    rank: int
    ch: object

    def __post_init__(self):
        if self.ch.constant_term() != self.rank:
            raise ValueError("degree-0 part of the Chern character must equal the rank")

    def __add__(self, other):
        _same_space(self, other)
        return KClass(self.space, self.rank + other.rank, self.ch + other.ch)

    def __neg__(self):
        return KClass(self.space, -self.rank, -self.ch)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return tensor_ch(self, other)

    def __eq__(self, other):
        if not isinstance(other, KClass):
            return NotImplemented
        return self.space is other.space and self.rank == other.rank and self.ch == other.ch

    __hash__ = None


def bundle(space, rank: int, chern: Sequence = ()) -> BundleClass:
    return BundleClass(space, rank, tuple(chern))


def trivial(space, rank: int = 1) -> BundleClass:
    return BundleClass(space, rank, ())


def line_bundle(space, c1) -> BundleClass:
    return BundleClass(space, 1, (c1,))


def from_total_chern(space, rank: int, total) -> BundleClass:
    """Bundle with the given total Chern class (degree parts beyond the rank must vanish)."""
    m = min(rank, space.dim)
    for i in range(m + 1, space.dim + 1):
        if not total.degree_part(2 * i).is_zero():
            raise ValueError(f"total Chern class has a nonzero part in degree {2 * i} beyond the rank")
    return BundleClass(space, rank, tuple(total.degree_part(2 * i) for i in range(1, m + 1)))


def total_chern(E: BundleClass):
    return E.total()


# Newton identities


def power_sums(E: BundleClass):
    """p_k = sum of k-th powers of the Chern roots, for k = 1..dim."""
    n = E.space.dim
    p = [None]
    for k in range(1, n + 1):
        s = E.space.zero()
        for i in range(1, k):
            ci = E.c(i)
            if not ci.is_zero():
                s = s + ci * p[k - i] * (-1) ** (i - 1)
        s = s + E.c(k) * ((-1) ** (k - 1) * k)
        p.append(s)
    return p


def chern_to_ch(E: BundleClass) -> KClass:
    """Chern character via Newton's identities, ch_k = p_k / k!."""
    p = power_sums(E)
    ch = E.space.scalar(E.rank)
    for k in range(1, E.space.dim + 1):
        ch = ch + p[k] * Fraction(1, factorial(k))
    return KClass(E.space, E.rank, ch)


def ch_to_chern(x: KClass) -> BundleClass:
    """Inverse of :func:`chern_to_ch`."""
    if x.rank < 0:
        raise NegativeRank(f"rank {x.rank}")
    space = x.space
    n = space.dim
    p = [None] + [x.ch.degree_part(2 * k) * factorial(k) for k in range(1, n + 1)]
    e = [space.one()]
    for k in range(1, n + 1):
        s = space.zero()
        for i in range(1, k + 1):
            s = s + e[k - i] * p[i] * (-1) ** (i - 1)
        e.append(s * Fraction(1, k))
    for k in range(x.rank + 1, n + 1):
        if not e[k].is_zero():
            raise NotABundleClass(f"c_{k} does not vanish for rank {x.rank}")
    return BundleClass(space, x.rank, tuple(e[1 : min(x.rank, n) + 1]))


# formal Chern roots


def _root_ring(r: int, top: int):
    return free_presentation([(f"x{i + 1}", 2) for i in range(r)], top)


@lru_cache(maxsize=None)
def _elementary_monomial(r: int, top: int, b: Tuple[int, ...]) -> Tuple:
    """Expansion of prod e_i^{b_i} in the roots, as a tuple of (monomial, coeff)."""
    R = _root_ring(r, top)
    xs = R.gens()
    out = R.one()
    for i, bi in enumerate(b, start=1):
        if bi:
            ei = R.zero()
            for S in combinations(range(r), i):
                t = R.one()
                for j in S:
                    t = t * xs[j]
                ei = ei + t
            out = out * ei**bi
    return tuple(out.terms.items())


def elementary_decomposition(poly, r: int) -> Dict[Tuple[int, ...], Fraction]:
    """Write a symmetric polynomial in the roots as a polynomial in e_1..e_r.

    Returns ``{b: coeff}`` meaning ``sum coeff * prod e_i^{b_i}``.
    """
    top = poly.owner.truncation_degree
    rest = dict(poly.terms)
    out: Dict[Tuple[int, ...], Fraction] = {}
    while rest:
        a = max(rest)
        c = rest[a]
        if any(a[i] < a[i + 1] for i in range(r - 1)):
            raise NonSymmetricResult(f"leading monomial {a} is not a partition")
        b = tuple(a[i] - (a[i + 1] if i + 1 < r else 0) for i in range(r))
        out[b] = out.get(b, 0) + c
        for m, cc in _elementary_monomial(r, top, b):
            v = rest.get(m, 0) - c * cc
            if v:
                rest[m] = v
            else:
                rest.pop(m, None)
    return out


def _evaluate_elementary(decomp, E: BundleClass):
    space = E.space
    cs = [E.c(i) for i in range(1, E.rank + 1)]
    out = space.zero()
    for b, c in decomp.items():
        t = space.one() * c
        for ci, bi in zip(cs, b):
            if bi:
                t = t * ci**bi
        out = out + t
    return out


def _check_roots(E: BundleClass, root_bound: int):
    if E.rank > root_bound:
        raise RootBoundExceeded(f"rank {E.rank} exceeds root bound {root_bound}")


def symmetric_apply(series, E: BundleClass, mode: str = "product", root_bound: int = DEFAULT_ROOT_BOUND):
    """prod f(x_i) or sum f(x_i) over the Chern roots x_i of E.

    ``series`` is anything accepted by :func:`apply_series`.  In product mode
    the series must have constant term 1.
    """
    if mode not in ("product", "sum"):
        raise ValueError("mode must be 'product' or 'sum'")
    _check_roots(E, root_bound)
    r = E.rank
    if r == 0:
        return E.space.one() if mode == "product" else E.space.zero()
    R = _root_ring(r, 2 * E.space.dim)
    values = [apply_series(series, x) for x in R.gens()]
    acc = R.one() if mode == "product" else R.zero()
    for v in values:
        acc = acc * v if mode == "product" else acc + v
    return _evaluate_elementary(elementary_decomposition(acc, r), E)


def chern_to_ch_by_roots(E: BundleClass, root_bound: int = DEFAULT_ROOT_BOUND) -> KClass:
    """Chern character as sum of exp(x_i); independent of Newton's identities."""
    return KClass(E.space, E.rank, symmetric_apply(exp_series, E, "sum", root_bound))


def todd(E: BundleClass, series=None, root_bound: int = DEFAULT_ROOT_BOUND):
    """Todd class prod x_i / (1 - e^{-x_i}); ``series`` overrides the factor."""
    return symmetric_apply(series or todd_series, E, "product", root_bound)


def dual(E: BundleClass) -> BundleClass:
    return BundleClass(E.space, E.rank, tuple(c * (-1) ** i for i, c in enumerate(E.chern, start=1)))


def twist_by_line(E: BundleClass, L: BundleClass) -> BundleClass:
    """E tensor L for a line bundle L: c_k = sum_i C(r-i, k-i) c_i l^{k-i}."""
    space = _same_space(E, L)
    if L.rank != 1:
        raise ValueError("twist requires a line bundle")
    r = E.rank
    l = L.c(1)
    chern = []
    for k in range(1, min(r, space.dim) + 1):
        s = space.zero()
        for i in range(0, k + 1):
            s = s + E.c(i) * l ** (k - i) * comb(r - i, k - i)
        chern.append(s)
    return BundleClass(space, r, tuple(chern))


def whitney_sum(E: BundleClass, F: BundleClass) -> BundleClass:
    space = _same_space(E, F)
    return from_total_chern(space, E.rank + F.rank, E.total() * F.total())


def tensor_ch(x: KClass, y: KClass) -> KClass:
    space = _same_space(x, y)
    return KClass(space, x.rank * y.rank, x.ch * y.ch)


def segre(E: BundleClass):
    return invert_unit(E.total())


def lambda_minus_one(E: BundleClass, root_bound: int = DEFAULT_ROOT_BOUND) -> KClass:
    """Chern character of sum_k (-1)^k Lambda^k E from explicit exterior powers.

    Lambda^k E has Chern roots x_S = sum_{i in S} x_i over k-subsets S.
    """
    _check_roots(E, root_bound)
    r = E.rank
    if r == 0:
        return KClass(E.space, 1, E.space.one())
    R = _root_ring(r, 2 * E.space.dim)
    ex = [apply_series(exp_series, x) for x in R.gens()]
    acc = R.zero()
    for k in range(r + 1):
        for S in combinations(range(r), k):
            t = R.one()
            for j in S:
                t = t * ex[j]
            acc = acc + t * (-1) ** k
    ch = _evaluate_elementary(elementary_decomposition(acc, r), E)
    return KClass(E.space, 0, ch)


def pullback_bundle(E: BundleClass, pullback, target_space) -> BundleClass:
    """Bundle on ``target_space`` with Chern classes pulled back by ``pullback``."""
    return BundleClass(target_space, E.rank, tuple(pullback(c) for c in E.chern))


def pullback_k(x: KClass, pullback, target_space) -> KClass:
    return KClass(target_space, x.rank, pullback(x.ch))


def torsion_ch(immersion, ch_payload, series=None):
    """i_*(ch(payload) td(N)^{-1}): Chern character of a pushed-forward sheaf.

    ``ch_payload`` is a ring element on the subvariety (or a KClass).
    """
    if isinstance(ch_payload, KClass):
        ch_payload = ch_payload.ch
    return immersion.pushforward(ch_payload * invert_unit(todd(immersion.normal, series)))
