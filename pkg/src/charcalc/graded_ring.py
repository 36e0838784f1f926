"""Truncated graded-commutative Q-algebras given by monomial rewrite rules.

A presentation lists generators with (even) degrees, a truncation degree and
a set of rewrite rules ``monomial -> polynomial``.  Rules must decrease every
monomial in the elimination order that compares the exponent of the last
declared generator first; this guarantees termination.  Confluence is checked
exhaustively on all monomials up to the truncation degree.

Elements keep their terms in normal form, with exact ``Fraction``
coefficients.  Every monomial of degree above the truncation degree is zero.
"""

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

Monomial = Tuple[int, ...]
Terms = Dict[Monomial, Fraction]


class PresentationError(ValueError):
    """A ring presentation is malformed."""


class NonTerminatingRules(PresentationError):
    pass


class NonConfluentRules(PresentationError):
    pass


class MissingNormalForm(PresentationError):
    """The presentation leaves a top-degree or overflow monomial undetermined."""


class DegreeMismatch(PresentationError):
    pass


class OwnerMismatch(ValueError):
    """Two elements from different rings were combined."""


class NotNilpotent(ValueError):
    pass


class NotAUnit(ValueError):
    pass


def as_rational(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, bool) or not isinstance(q, (int, Fraction)):
        if isinstance(q, str):
            return Fraction(q)
        raise TypeError(f"expected an exact rational, got {type(q).__name__}")
    return Fraction(q)


def _is_scalar(q) -> bool:
    return isinstance(q, (int, Fraction)) and not isinstance(q, bool)


class RingPresentation:
    """Generators, truncation degree and rewrite rules of a graded ring.

    Build instances with :func:`make_presentation`, which validates the
    input.  The presentation is immutable; the only internal state is a
    cache of monomial normal forms.
    """

    def __init__(self, names, degrees, truncation_degree, rules):
        self.names: Tuple[str, ...] = tuple(names)
        self.degrees: Tuple[int, ...] = tuple(degrees)
        self.truncation_degree: int = truncation_degree
        # rules: tuple of (lhs monomial, rhs terms)
        self.rules: Tuple[Tuple[Monomial, Terms], ...] = tuple(rules)
        self.index = {n: i for i, n in enumerate(self.names)}
        self._nf_cache: Dict[Monomial, Terms] = {}

    def __repr__(self):
        gens = ", ".join(f"{n}:{d}" for n, d in zip(self.names, self.degrees))
        return f"RingPresentation([{gens}], top={self.truncation_degree}, {len(self.rules)} rules)"

    @property
    def ngens(self) -> int:
        return len(self.names)

    def monomial_degree(self, m: Monomial) -> int:
        return sum(e * d for e, d in zip(m, self.degrees))

    def monomial(self, spec) -> Monomial:
        """Turn ``{name: exp}``, a name, or an exponent tuple into a monomial."""
        if isinstance(spec, str):
            spec = {spec: 1}
        if isinstance(spec, Mapping):
            m = [0] * self.ngens
            for name, e in spec.items():
                if name not in self.index:
                    raise KeyError(f"unknown generator {name!r}")
                if e < 0:
                    raise ValueError("negative exponent")
                m[self.index[name]] += e
            return tuple(m)
        m = tuple(int(e) for e in spec)
        if len(m) != self.ngens or any(e < 0 for e in m):
            raise ValueError(f"bad exponent vector {spec!r}")
        return m

    # normal forms

    def _find_rule(self, m: Monomial):
        for lhs, rhs in self.rules:
            if all(a >= b for a, b in zip(m, lhs)):
                return lhs, rhs
        return None

    def _apply(self, m: Monomial, lhs: Monomial, rhs: Terms) -> Terms:
        out: Terms = {}
        rest = tuple(a - b for a, b in zip(m, lhs))
        for r, c in rhs.items():
            nf = self.normal_form(tuple(a + b for a, b in zip(r, rest)))
            for mm, cc in nf.items():
                v = out.get(mm, 0) + c * cc
                if v:
                    out[mm] = v
                else:
                    out.pop(mm, None)
        return out

    def normal_form(self, m: Monomial) -> Terms:
        """Normal form of a single monomial (terms dict, do not mutate)."""
        cached = self._nf_cache.get(m)
        if cached is not None:
            return cached
        if self.monomial_degree(m) > self.truncation_degree:
            nf: Terms = {}
        else:
            rule = self._find_rule(m)
            if rule is None:
                nf = {m: Fraction(1)}
            else:
                nf = self._apply(m, *rule)
        self._nf_cache[m] = nf
        return nf

    def reduce(self, terms: Mapping) -> Terms:
        out: Terms = {}
        for m, c in terms.items():
            c = as_rational(c)
            if not c:
                continue
            for mm, cc in self.normal_form(tuple(m)).items():
                v = out.get(mm, 0) + c * cc
                if v:
                    out[mm] = v
                else:
                    out.pop(mm, None)
        return out

    def monomials(self, max_degree=None, min_degree=0) -> List[Monomial]:
        """All exponent vectors with degree in ``[min_degree, max_degree]``."""
        top = self.truncation_degree if max_degree is None else max_degree
        out: List[Monomial] = []

        def rec(i, prefix, deg):
            if i == self.ngens:
                if deg >= min_degree:
                    out.append(tuple(prefix))
                return
            e = 0
            while deg + e * self.degrees[i] <= top:
                prefix.append(e)
                rec(i + 1, prefix, deg + e * self.degrees[i])
                prefix.pop()
                e += 1

        rec(0, [], 0)
        return out

    def normal_monomials(self, degree: int) -> List[Monomial]:
        """Monomials of the given degree that are not rewritten."""
        return [
            m
            for m in self.monomials(degree, degree)
            if self.monomial_degree(m) == degree and self._find_rule(m) is None
        ]

    def with_truncation(self, truncation_degree: int) -> "RingPresentation":
        return RingPresentation(self.names, self.degrees, truncation_degree, self.rules)

    # element constructors

    def element(self, terms: Mapping = None) -> "GradedElement":
        return GradedElement(self, self.reduce(terms or {}))

    def zero(self) -> "GradedElement":
        return GradedElement(self, {})

    def one(self) -> "GradedElement":
        return self.scalar(1)

    def scalar(self, q) -> "GradedElement":
        q = as_rational(q)
        return GradedElement(self, {(0,) * self.ngens: q} if q else {})

    def gen(self, name: str) -> "GradedElement":
        return self.element({self.monomial(name): 1})

    def gens(self) -> List["GradedElement"]:
        return [self.gen(n) for n in self.names]


def _convert_terms(target: RingPresentation, rhs) -> Terms:
    """Accept a GradedElement (matched by generator names) or a mapping."""
    if isinstance(rhs, GradedElement):
        out: Terms = {}
        for m, c in rhs.terms.items():
            spec = {rhs.owner.names[i]: e for i, e in enumerate(m) if e}
            mm = target.monomial(spec)
            out[mm] = out.get(mm, 0) + c
        return {m: c for m, c in out.items() if c}
    if isinstance(rhs, Mapping):
        out = {}
        for m, c in rhs.items():
            mm = target.monomial(m)
            out[mm] = out.get(mm, 0) + as_rational(c)
        return {m: c for m, c in out.items() if c}
    if _is_scalar(rhs):
        return {(0,) * target.ngens: as_rational(rhs)} if rhs else {}
    raise TypeError(f"cannot use {rhs!r} as a rule right-hand side")


def _order_key(m: Monomial):
    return tuple(reversed(m))


def make_presentation(generators: Sequence, truncation_degree: int, rewrite_rules: Iterable = ()) -> RingPresentation:
    """Validate and build a presentation.

    ``generators`` is a list of ``(name, degree)`` with even positive degree.
    Each rule is ``(lhs, rhs)`` where ``lhs`` is a monomial given as a name,
    a ``{name: exponent}`` mapping or an exponent tuple, and ``rhs`` is a
    GradedElement of a ring with matching generator names, a mapping from
    monomials to coefficients, or a scalar.
    """
    names = [n for n, _ in generators]
    degrees = [int(d) for _, d in generators]
    if len(set(names)) != len(names):
        raise PresentationError("duplicate generator names")
    for n, d in zip(names, degrees):
        if not isinstance(n, str) or not n:
            raise PresentationError(f"bad generator name {n!r}")
        if d < 1 or d % 2:
            raise DegreeMismatch(f"generator {n} has degree {d}; degrees must be even and positive")
    if truncation_degree < 0:
        raise PresentationError("negative truncation degree")
    shell = RingPresentation(names, degrees, truncation_degree, ())
    rules = []
    for lhs, rhs in rewrite_rules:
        lm = shell.monomial(lhs)
        if not any(lm):
            raise PresentationError("a rule cannot rewrite the constant monomial")
        rt = _convert_terms(shell, rhs)
        ldeg = shell.monomial_degree(lm)
        for m in rt:
            if shell.monomial_degree(m) != ldeg:
                raise DegreeMismatch(f"rule for {lm} is not homogeneous")
            if _order_key(m) >= _order_key(lm):
                raise NonTerminatingRules(f"rule for {lm} does not decrease monomial {m}")
        rules.append((lm, rt))
    pres = RingPresentation(names, degrees, truncation_degree, rules)
    _check_confluence(pres)
    return pres


def _check_confluence(pres: RingPresentation):
    if len(pres.rules) < 2:
        return
    for m in pres.monomials():
        applicable = [(l, r) for l, r in pres.rules if all(a >= b for a, b in zip(m, l))]
        if len(applicable) < 2:
            continue
        ref = pres.normal_form(m)
        for lhs, rhs in applicable[1:]:
            if pres._apply(m, lhs, rhs) != ref:
                raise NonConfluentRules(f"monomial {m} has two different normal forms")


def free_presentation(generators: Sequence, truncation_degree: int) -> RingPresentation:
    """Polynomial ring on the generators, truncated above the given degree."""
    return make_presentation(generators, truncation_degree, ())


def extend_presentation(base: RingPresentation, new_generators: Sequence, truncation_degree: int, rules_fn) -> RingPresentation:
    """Append generators to ``base`` keeping its rules.

    ``rules_fn(free)`` receives the free presentation on all generators (at
    the new truncation degree) and returns the additional rules.
    """
    gens = list(zip(base.names, base.degrees)) + list(new_generators)
    free = free_presentation(gens, truncation_degree)
    old = [(tuple(l) + (0,) * len(new_generators), {tuple(m) + (0,) * len(new_generators): c for m, c in r.items()})
           for l, r in base.rules]
    return make_presentation(gens, truncation_degree, old + list(rules_fn(free)))


class GradedElement:
    """Element of a truncated graded ring, terms kept in normal form."""

    __slots__ = ("owner", "terms")

    def __init__(self, owner: RingPresentation, terms: Terms):
        self.owner = owner
        self.terms = terms

    # helpers expected by the generic series code

    @property
    def top(self) -> int:
        return self.owner.truncation_degree

    def one(self) -> "GradedElement":
        return self.owner.one()

    def zero(self) -> "GradedElement":
        return self.owner.zero()

    def _coerce(self, other) -> "GradedElement":
        if isinstance(other, GradedElement):
            if other.owner is not self.owner:
                raise OwnerMismatch("elements belong to different rings")
            return other
        if _is_scalar(other):
            return self.owner.scalar(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        out = dict(self.terms)
        for m, c in o.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return GradedElement(self.owner, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedElement(self.owner, {m: -c for m, c in self.terms.items()})

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
        if _is_scalar(other):
            q = as_rational(other)
            if not q:
                return self.zero()
            return GradedElement(self.owner, {m: c * q for m, c in self.terms.items()})
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        pres = self.owner
        degs = pres.degrees
        top = pres.truncation_degree
        out: Terms = {}
        for m1, c1 in self.terms.items():
            d1 = sum(e * d for e, d in zip(m1, degs))
            for m2, c2 in o.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                if d1 + sum(e * d for e, d in zip(m2, degs)) > top:
                    continue
                c = c1 * c2
                for mm, cc in pres.normal_form(m).items():
                    v = out.get(mm, 0) + c * cc
                    if v:
                        out[mm] = v
                    else:
                        out.pop(mm, None)
        return GradedElement(pres, out)

    __rmul__ = __mul__

    def __truediv__(self, q):
        if not _is_scalar(q):
            return NotImplemented
        return self * (1 / as_rational(q))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = self.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, GradedElement):
            return self.owner is other.owner and self.terms == other.terms
        if _is_scalar(other):
            return self.terms == self.owner.scalar(other).terms
        return NotImplemented

    def __hash__(self):
        return hash((id(self.owner), frozenset(self.terms.items())))

    def __repr__(self):
        from .render import render

        return f"GradedElement({render(self)})"

    def is_zero(self) -> bool:
        return not self.terms

    def degree_part(self, k: int) -> "GradedElement":
        degs = self.owner.degrees
        return GradedElement(
            self.owner,
            {m: c for m, c in self.terms.items() if sum(e * d for e, d in zip(m, degs)) == k},
        )

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.owner.ngens, Fraction(0))

    def coefficient(self, monomial) -> Fraction:
        return self.terms.get(self.owner.monomial(monomial), Fraction(0))

    def degrees_present(self) -> List[int]:
        return sorted({self.owner.monomial_degree(m) for m in self.terms})

    def is_homogeneous(self, k: int) -> bool:
        return all(self.owner.monomial_degree(m) == k for m in self.terms)


def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def scale(q, a):
    return a * as_rational(q)


def degree_part(a, k: int):
    return a.degree_part(k)


def ring_map(source: RingPresentation, images: Mapping[str, object], target_one):
    """Ring homomorphism from ``source`` given by generator images.

    ``images`` maps every generator name of ``source`` to an element of the
    target ring (anything supporting +, *, ** and scalar multiplication);
    ``target_one`` is the unit of the target ring.  The map is only a ring
    homomorphism if the images satisfy the rules; callers are responsible
    for that.
    """
    imgs = [images[n] for n in source.names]
    zero = target_one * 0

    def apply(x: GradedElement):
        if x.owner is not source:
            raise OwnerMismatch("element does not belong to the source ring")
        powers: Dict[Tuple[int, int], object] = {}
        out = zero
        for m, c in x.terms.items():
            term = target_one * c
            for i, e in enumerate(m):
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = imgs[i] ** e
                    term = term * powers[key]
            out = out + term
        return out

    return apply


def coefficient_of_last(x: GradedElement, k: int, base: RingPresentation) -> GradedElement:
    """Coefficient of ``g**k`` where ``g`` is the last generator of ``x``'s ring.

    ``base`` must consist of the remaining generators in the same order.
    """
    if x.owner.names[:-1] != base.names:
        raise OwnerMismatch("base ring does not match")
    return GradedElement(base, {m[:-1]: c for m, c in x.terms.items() if m[-1] == k})


def include_into(x: GradedElement, target: RingPresentation) -> GradedElement:
    """Map an element into a ring whose generators extend (as a prefix) those of ``x``."""
    src = x.owner
    if target.names[: src.ngens] != src.names:
        raise OwnerMismatch("target ring does not extend the source ring")
    pad = (0,) * (target.ngens - src.ngens)
    return target.element({m + pad: c for m, c in x.terms.items()})


# power series on nilpotent elements


def series_divide(num: Sequence, den: Sequence, n: int) -> List[Fraction]:
    """First ``n`` coefficients of num/den for formal power series."""
    num = [as_rational(c) for c in num] + [Fraction(0)] * n
    den = [as_rational(c) for c in den] + [Fraction(0)] * n
    if not den[0]:
        raise NotAUnit("denominator series has zero constant term")
    out: List[Fraction] = []
    for k in range(n):
        s = num[k] - sum((out[i] * den[k - i] for i in range(k)), Fraction(0))
        out.append(s / den[0])
    return out


def _factorials(n):
    f = [1]
    for k in range(1, n + 1):
        f.append(f[-1] * k)
    return f


def exp_series(n: int) -> List[Fraction]:
    f = _factorials(n)
    return [Fraction(1, f[k]) for k in range(n)]


def expm1_over_x_series(n: int) -> List[Fraction]:
    """(e^x - 1)/x."""
    f = _factorials(n + 1)
    return [Fraction(1, f[k + 1]) for k in range(n)]


def todd_inverse_series(n: int) -> List[Fraction]:
    """(1 - e^{-x})/x."""
    f = _factorials(n + 1)
    return [Fraction((-1) ** k, f[k + 1]) for k in range(n)]


def todd_series(n: int) -> List[Fraction]:
    """x/(1 - e^{-x})."""
    return series_divide([1], todd_inverse_series(n), n)


def flipped_todd_series(n: int) -> List[Fraction]:
    """x/(e^x - 1), the Todd series with the sign of x flipped."""
    return [c * (-1) ** k for k, c in enumerate(todd_series(n))]


def log1p_series(n: int) -> List[Fraction]:
    return [Fraction(0)] + [Fraction((-1) ** (k - 1), k) for k in range(1, n)]


SERIES = {
    "exp": exp_series,
    "expm1_over_x": expm1_over_x_series,
    "todd": todd_series,
    "todd_inverse": todd_inverse_series,
    "flipped_todd": flipped_todd_series,
    "log1p": log1p_series,
}


def _nterms(x) -> int:
    # generators have degree >= 2, so x**k vanishes once 2k exceeds the top degree
    return x.top // 2 + 1


def apply_series(coeffs, x):
    """Evaluate sum c_k x^k for nilpotent ``x`` (zero constant term).

    ``coeffs`` is a sequence of coefficients, a catalog name, or a callable
    ``n -> coefficients``.
    """
    if x.constant_term():
        raise NotNilpotent("series argument must have zero constant term")
    n = _nterms(x)
    if isinstance(coeffs, str):
        coeffs = SERIES[coeffs](n)
    elif callable(coeffs):
        coeffs = coeffs(n)
    coeffs = list(coeffs)[:n]
    result = x.zero()
    for c in reversed(coeffs):
        result = result * x + as_rational(c)
    return result


def invert_unit(a):
    c0 = a.constant_term()
    if not c0:
        raise NotAUnit("element has zero constant term")
    nil = a * (1 / c0) - 1
    return apply_series([(-1) ** k for k in range(_nterms(a))], nil) * (1 / c0)


def exp(x):
    return apply_series("exp", x)


def log1p(x):
    return apply_series("log1p", x)
