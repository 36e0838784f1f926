"""Smith-type diagonalisation over truncated power series rings.

Work in Q[[x_1..x_m]] truncated above a total degree ``precision``.  A
square matrix whose Fitting ideals are all generated by monomials can be
brought to the form  M = U diag(d_1, ..., d_r) V  with U, V invertible and
d_k monic monomials, d_k | d_{k+1}.  The generator of the k-th Fitting
ideal is d_1 ... d_k, and phi_k = d_k / d_{k-1} are the successive factors.

The elimination never divides by a non-unit: at each step the entries of
the remaining block are all divisible by the monomial g, one entry equals g
times a unit, and that entry is used as pivot.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from .report import CheckReport

Exps = Tuple[int, ...]


class PrincipalityViolation(ValueError):
    def __init__(self, k: int, message: str = ""):
        self.k = k
        super().__init__(message or f"Fitting ideal {k} is not generated by a monomial")


class PrecisionExhausted(ValueError):
    pass


class NonDivisible(ValueError):
    pass


def _q(c):
    """Coefficients are stored as gmpy2 rationals."""
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    return mpq(c)


_MPQ = type(mpq())


class LocalRing:
    """Q[[vars]] modulo terms of total degree above ``precision``.

    Monomials are packed into integers in base ``precision + 1`` so that
    multiplying monomials is adding keys; exponents of surviving terms never
    exceed the precision, so no carries occur.
    """

    def __init__(self, variables: Sequence[str], precision: int = 16):
        self.vars = tuple(variables)
        self.precision = precision
        self.nvars = len(self.vars)
        self.index = {v: i for i, v in enumerate(self.vars)}
        self._base = precision + 1
        self._exps: Dict[int, Exps] = {}
        self._deg: Dict[int, int] = {}

    def __repr__(self):
        return f"LocalRing({', '.join(self.vars)}; precision {self.precision})"

    def pack(self, m: Exps) -> int:
        key = 0
        for e in reversed(m):
            key = key * self._base + e
        return key

    def unpack(self, key: int) -> Exps:
        m = self._exps.get(key)
        if m is None:
            out, k = [], key
            for _ in range(self.nvars):
                k, e = divmod(k, self._base)
                out.append(e)
            m = tuple(out)
            self._exps[key] = m
            self._deg[key] = sum(m)
        return m

    def degree(self, key: int) -> int:
        d = self._deg.get(key)
        if d is None:
            self.unpack(key)
            d = self._deg[key]
        return d

    def series(self, terms=None) -> "LocalSeries":
        out: Dict[int, object] = {}
        for m, c in (terms or {}).items():
            m = tuple(m)
            if len(m) != self.nvars or any(e < 0 for e in m):
                raise ValueError(f"bad exponent vector {m}")
            if sum(m) <= self.precision and c:
                k = self.pack(m)
                out[k] = out.get(k, 0) + _q(c)
        return LocalSeries(self, {k: c for k, c in out.items() if c})

    def zero(self):
        return LocalSeries(self, {})

    def one(self):
        return self.constant(1)

    def constant(self, c):
        c = _q(c)
        return LocalSeries(self, {0: c} if c else {})

    def monomial(self, exps: Exps, c=1) -> "LocalSeries":
        return self.series({tuple(exps): c})

    def var(self, name: str) -> "LocalSeries":
        m = [0] * self.nvars
        m[self.index[name]] = 1
        return self.monomial(m)


class LocalSeries:
    """Truncated power series; ``_t`` maps packed monomials to coefficients."""

    __slots__ = ("ring", "_t", "_buckets")

    def __init__(self, ring: LocalRing, packed: Dict[int, object]):
        self.ring = ring
        self._t = packed
        self._buckets = None

    @property
    def terms(self) -> Dict[Exps, object]:
        un = self.ring.unpack
        return {un(k): c for k, c in self._t.items()}

    def _coerce(self, other):
        if isinstance(other, LocalSeries):
            if other.ring is not self.ring:
                raise ValueError("series from different rings")
            return other
        if isinstance(other, (int, Fraction, _MPQ)):
            return self.ring.constant(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        out = dict(self._t)
        for k, c in o._t.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return LocalSeries(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return LocalSeries(self.ring, {k: -c for k, c in self._t.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def _by_degree(self):
        if self._buckets is None:
            deg = self.ring.degree
            b: Dict[int, list] = {}
            for k, c in self._t.items():
                b.setdefault(deg(k), []).append((k, c))
            self._buckets = sorted(b.items())
        return self._buckets

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, _MPQ)):
            if not other:
                return self.ring.zero()
            q = _q(other)
            return LocalSeries(self.ring, {k: c * q for k, c in self._t.items()})
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        p = self.ring.precision
        if len(o._t) == 1 or len(self._t) == 1:
            # monomial times series: shift the keys
            (k0, c0), series = (next(iter(o._t.items())), self) if len(o._t) == 1 else (next(iter(self._t.items())), o)
            d0 = self.ring.degree(k0)
            deg = self.ring.degree
            return LocalSeries(self.ring, {k + k0: c * c0 for k, c in series._t.items() if deg(k) + d0 <= p})
        out: Dict[int, object] = {}
        get = out.get
        b_buckets = o._by_degree()
        for d1, items1 in self._by_degree():
            for d2, items2 in b_buckets:
                if d1 + d2 > p:
                    break
                for k1, c1 in items1:
                    for k2, c2 in items2:
                        k = k1 + k2
                        out[k] = get(k, 0) + c1 * c2
        return LocalSeries(self.ring, {k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = self.ring.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._t == o._t

    __hash__ = None

    def __repr__(self):
        return f"LocalSeries({render_series(self)})"

    def is_zero(self) -> bool:
        return not self._t

    def constant_term(self):
        return self._t.get(0, mpq(0))

    def is_unit(self) -> bool:
        return bool(self.constant_term())

    def coefficient(self, m: Exps):
        return self._t.get(self.ring.pack(tuple(m)), mpq(0))

    def inverse(self) -> "LocalSeries":
        c0 = self.constant_term()
        if not c0:
            raise ValueError("series is not a unit")
        # solve sum_{a+b=m} u_a v_b = 0 for m != 0, degree by degree
        inv0 = 1 / c0
        rest = [(d, items) for d, items in self._by_degree() if d > 0]
        out: Dict[int, object] = {0: inv0}
        levels: Dict[int, list] = {0: [(0, inv0)]}
        for deg in range(1, self.ring.precision + 1):
            acc: Dict[int, object] = {}
            for dm, items in rest:
                if dm > deg:
                    break
                for kb, vb in levels.get(deg - dm, ()):
                    for km, cm in items:
                        t = km + kb
                        acc[t] = acc.get(t, 0) + cm * vb
            level = []
            for t, v in acc.items():
                if v:
                    w = -v * inv0
                    out[t] = w
                    level.append((t, w))
            levels[deg] = level
        return LocalSeries(self.ring, out)

    def truncate(self, precision: int) -> "LocalSeries":
        """Drop the terms of total degree above ``precision``."""
        deg = self.ring.degree
        return LocalSeries(self.ring, {k: c for k, c in self._t.items() if deg(k) <= precision})

    def divide_monomial(self, g: Exps) -> "LocalSeries":
        """Exact quotient by the monomial g; raises NonDivisible otherwise."""
        un = self.ring.unpack
        gk = self.ring.pack(tuple(g))
        for k in self._t:
            if any(a < b for a, b in zip(un(k), g)):
                raise NonDivisible(f"monomial {un(k)} is not divisible by {tuple(g)}")
        return LocalSeries(self.ring, {k - gk: c for k, c in self._t.items()})

    def min_exponent(self) -> Optional[Exps]:
        if not self._t:
            return None
        un = self.ring.unpack
        return tuple(min(col) for col in zip(*(un(k) for k in self._t)))


def render_monomial(ring: LocalRing, m: Exps, latex: bool = False) -> str:
    pieces = []
    for n, e in zip(ring.vars, m):
        if e == 1:
            pieces.append(n)
        elif e:
            pieces.append(f"{n}^{{{e}}}" if latex else f"{n}^{e}")
    return ("" if latex else "*").join(pieces) or "1"


def render_series(s: LocalSeries, latex: bool = False) -> str:
    from .render import _join

    items = sorted(s.terms.items(), key=lambda mc: (sum(mc[0]), tuple(-e for e in mc[0])))
    pieces = []
    for m, c in items:
        mono = render_monomial(s.ring, m, latex) if any(m) else ""
        pieces.append((Fraction(int(c.numerator), int(c.denominator)), mono))
    return _join(pieces, latex)


class LocalMatrix:
    """Square matrix of LocalSeries over one ring."""

    def __init__(self, ring: LocalRing, rows: Sequence[Sequence[LocalSeries]]):
        self.ring = ring
        self.rows = [list(r) for r in rows]
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ValueError("matrix must be square")
        for r in self.rows:
            for e in r:
                if e.ring is not ring:
                    raise ValueError("entry from a different ring")

    @classmethod
    def identity(cls, ring, n):
        return cls(ring, [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, ring, entries):
        n = len(entries)
        return cls(ring, [[entries[i] if i == j else ring.zero() for j in range(n)] for i in range(n)])

    @property
    def size(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "LocalMatrix") -> "LocalMatrix":
        n = self.size
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                s = self.ring.zero()
                for k in range(n):
                    a, b = self.rows[i][k], other.rows[k][j]
                    if a._t and b._t:
                        s = s + a * b
                row.append(s)
            out.append(row)
        return LocalMatrix(self.ring, out)

    def __sub__(self, other):
        return LocalMatrix(self.ring, [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __eq__(self, other):
        if not isinstance(other, LocalMatrix):
            return NotImplemented
        return all(a == b for r1, r2 in zip(self.rows, other.rows) for a, b in zip(r1, r2)) and self.size == other.size

    __hash__ = None

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.rows for e in r)

    def minor(self, rows, cols) -> LocalSeries:
        return _det([[self.rows[i][j] for j in cols] for i in rows], self.ring)

    def det(self) -> LocalSeries:
        return self.minor(range(self.size), range(self.size))

    def constant_det(self) -> Fraction:
        """Determinant of the constant-term matrix (the constant term of det)."""
        return _det_fraction([[e.constant_term() for e in r] for r in self.rows])

    def __repr__(self):
        return "LocalMatrix([" + "; ".join(", ".join(render_series(e) for e in r) for r in self.rows) + "])"


def _det(rows, ring) -> LocalSeries:
    n = len(rows)
    if n == 0:
        return ring.one()
    if n == 1:
        return rows[0][0]
    out = ring.zero()
    for j in range(n):
        a = rows[0][j]
        if a.is_zero():
            continue
        sub = [r[:j] + r[j + 1 :] for r in rows[1:]]
        term = a * _det(sub, ring)
        out = out + term if j % 2 == 0 else out - term
    return out


def _det_fraction(rows) -> Fraction:
    n = len(rows)
    a = [list(r) for r in rows]
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k]), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det


def minor_table(M: LocalMatrix, upto: Optional[int] = None) -> Dict[Tuple[tuple, tuple], LocalSeries]:
    """All minors of size <= upto, keyed by (rows, cols).

    Built size by size: each minor is expanded along its first row using the
    already computed minors one size smaller.
    """
    n = M.size
    upto = n if upto is None else upto
    R = M.ring
    table: Dict[Tuple[tuple, tuple], LocalSeries] = {((), ()): R.one()}
    for k in range(1, upto + 1):
        for rs in combinations(range(n), k):
            row = M.rows[rs[0]]
            rest = rs[1:]
            for cs in combinations(range(n), k):
                out = R.zero()
                for j, c in enumerate(cs):
                    a = row[c]
                    if a.is_zero():
                        continue
                    sub = table[(rest, cs[:j] + cs[j + 1 :])]
                    if sub.is_zero():
                        continue
                    out = out + a * sub if j % 2 == 0 else out - a * sub
                table[(rs, cs)] = out
    return table


def fitting_minors(M: LocalMatrix, k: int, table=None) -> List[LocalSeries]:
    """All k x k minors of M (generators of the k-th Fitting ideal)."""
    n = M.size
    if not 1 <= k <= n:
        raise ValueError("minor size out of range")
    if table is None:
        table = minor_table(M, k)
    return [table[(rs, cs)] for rs in combinations(range(n), k) for cs in combinations(range(n), k)]


def monomial_principality(generators: Sequence[LocalSeries]) -> Optional[Exps]:
    """Monomial generating the ideal, or None if the ideal is not monomial-principal.

    The candidate is the componentwise minimum g of all exponents appearing;
    the ideal is (g) when some generator is g times a unit, i.e. has a
    nonzero coefficient at g.
    """
    gens = [f for f in generators if not f.is_zero()]
    if not gens:
        return None
    g = tuple(min(col) for col in zip(*(m for f in gens for m in f.terms)))
    if any(f.coefficient(g) for f in gens):
        return g
    return None


@dataclass(frozen=True)
class DivisorSequence:
    diagonal: Tuple[Exps, ...]  # d_k = gen_k / gen_{k-1}
    phi: Tuple[Exps, ...]  # phi_k = d_k / d_{k-1}


def _quotient(a: Exps, b: Exps) -> Exps:
    q = tuple(x - y for x, y in zip(a, b))
    if any(e < 0 for e in q):
        raise NonDivisible(f"{b} does not divide {a}")
    return q


def divisor_sequence(generators: Sequence[Optional[Exps]]) -> DivisorSequence:
    """From Fitting generators gen_1, gen_2, ... to the diagonal and its factors."""
    prev = None
    diag = []
    for k, g in enumerate(generators, start=1):
        if g is None:
            raise PrincipalityViolation(k)
        g = tuple(g)
        diag.append(g if prev is None else _quotient(g, prev))
        prev = g
    phi = []
    for k, d in enumerate(diag):
        phi.append(d if k == 0 else _quotient(d, diag[k - 1]))
    return DivisorSequence(tuple(diag), tuple(phi))


def fitting_generators(M: LocalMatrix) -> List[Exps]:
    out = []
    table = minor_table(M)
    for k in range(1, M.size + 1):
        minors = fitting_minors(M, k, table)
        g = monomial_principality(minors)
        if g is None:
            if all(f.is_zero() for f in minors):
                raise PrecisionExhausted(f"all {k} x {k} minors vanish to precision {M.ring.precision}")
            raise PrincipalityViolation(k)
        out.append(g)
    return out


@dataclass
class SmithResult:
    U: LocalMatrix
    V: LocalMatrix
    diagonal: List[LocalSeries]
    phi: List[Exps]
    precision: int

    @property
    def diagonal_exponents(self) -> List[Exps]:
        return [next(iter(d.terms)) for d in self.diagonal]


def diagonalize(M: LocalMatrix, check_fitting: bool = True) -> SmithResult:
    """Find U, V invertible and monic monomials d_k with M = U diag(d) V."""
    R = M.ring
    n = M.size
    if check_fitting:
        expected = divisor_sequence(fitting_generators(M))
    A = [list(r) for r in M.rows]
    U = [[R.one() if i == j else R.zero() for j in range(n)] for i in range(n)]
    V = [[R.one() if i == j else R.zero() for j in range(n)] for i in range(n)]
    diag: List[Exps] = []
    for k in range(n):
        block = [(i, j) for i in range(k, n) for j in range(k, n) if A[i][j]._t]
        if not block:
            raise PrecisionExhausted(f"remaining block vanishes to precision {R.precision} at step {k + 1}")
        g = tuple(min(col) for col in zip(*(m for i, j in block for m in A[i][j].terms)))
        pivot = next(((i, j) for i, j in block if A[i][j].coefficient(g)), None)
        if pivot is None:
            raise PrincipalityViolation(k + 1)
        pi, pj = pivot
        if pi != k:
            A[k], A[pi] = A[pi], A[k]
            for row in U:
                row[k], row[pi] = row[pi], row[k]
        if pj != k:
            for row in A:
                row[k], row[pj] = row[pj], row[k]
            V[k], V[pj] = V[pj], V[k]
        u = A[k][k].divide_monomial(g)
        if not u.is_unit():
            raise PrecisionExhausted("pivot cofactor is not a unit")
        uinv = u.inverse()
        for j in range(k + 1, n):
            A[k][j] = A[k][j] * uinv
        A[k][k] = R.monomial(g)
        for row in U:
            row[k] = row[k] * u
        for i in range(k + 1, n):
            if not A[i][k]._t:
                continue
            c = A[i][k].divide_monomial(g)
            for j in range(k + 1, n):
                if A[k][j]._t:
                    A[i][j] = A[i][j] - c * A[k][j]
            A[i][k] = R.zero()
            for row in U:
                if row[i]._t:
                    row[k] = row[k] + c * row[i]
        for j in range(k + 1, n):
            if not A[k][j]._t:
                continue
            c = A[k][j].divide_monomial(g)
            A[k][j] = R.zero()
            V[k] = [a + c * b if b._t else a for a, b in zip(V[k], V[j])]
        diag.append(g)
    phi = [diag[0]] + [_quotient(diag[k], diag[k - 1]) for k in range(1, n)] if n else []
    if check_fitting and tuple(diag) != expected.diagonal:
        raise PrecisionExhausted("elimination disagrees with the Fitting ideals at this precision")
    Um, Vm = LocalMatrix(R, U), LocalMatrix(R, V)
    if not Um.constant_det() or not Vm.constant_det():
        raise PrecisionExhausted("transformation matrices are not invertible")
    return SmithResult(Um, Vm, [R.monomial(g) for g in diag], phi, R.precision)


def verify_smith(M: LocalMatrix, result: SmithResult) -> CheckReport:
    """Check U diag V = M to the common precision, and that U, V are invertible."""
    R = M.ring
    p = min(R.precision, result.precision)
    UD = LocalMatrix(R, [[u * d for u, d in zip(row, result.diagonal)] for row in result.U.rows])
    lhs = UD @ result.V
    if p < R.precision:
        lhs = LocalMatrix(R, [[e.truncate(p) for e in row] for row in lhs.rows])
        M = LocalMatrix(R, [[e.truncate(p) for e in row] for row in M.rows])
    units = bool(result.U.constant_det()) and bool(result.V.constant_det())
    notes = [] if units else ["U or V not invertible"]
    if p < R.precision:
        notes.append(f"compared to precision {p}")
    return CheckReport.compare("smith", lhs, M, extra_ok=units, note="; ".join(notes))
