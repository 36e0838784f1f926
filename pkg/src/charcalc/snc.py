"""Simple normal crossing divisors D = sum m_i D_i and torsion classes on them.

For S = sum m_i [D_i] the series

    mu = sum_{k>=1} (-1)^{k-1} S^{k-1} / k! = (1 - e^{-S}) / S

satisfies S * mu = 1 - e^{-S} = ch(O_D).  The classes built here decompose
O_D into sheaves u_i supported on the branches, with correction classes
zeta_ij on the pairwise intersections, such that for every branch

    ch(u_i) td(N_i)^{-1} - m_i mu|_{D_i} = sum_{j != i} (i_{D_ij -> D_i})_* zeta_ij,

with zeta_ji = -zeta_ij.  The u_i are built inductively: u_k is the
restriction to D_k of e^{-S_{<k}} (1 + e^{-D_k} + ... + e^{-(m_k - 1) D_k}),
where S_{<k} = sum_{i<k} m_i D_i.
"""

from dataclasses import dataclass, field
from math import comb, factorial
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .classes import KClass, torsion_ch
from .graded_ring import apply_series, exp, invert_unit, todd_inverse_series
from .classes import todd
from .spaces import (
    Immersion,
    MissingGysinData,
    Space,
    compose_immersions,
    projective_space,
    sub_linear_space,
)


class RestrictionMismatch(ValueError):
    pass


class IdentityViolation(ValueError):
    pass


@dataclass(eq=False)
class Intersection:
    """D_ij with its immersions into D_i, D_j and the ambient space."""

    space: Space
    to_i: Immersion
    to_j: Immersion
    to_ambient: Immersion


@dataclass(eq=False)
class SNCDivisor:
    ambient: Space
    branches: List[Immersion]
    multiplicities: List[int]
    pairs: Dict[Tuple[int, int], Intersection] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.branches) != len(self.multiplicities):
            raise ValueError("one multiplicity per branch")
        for D, m in zip(self.branches, self.multiplicities):
            if D.ambient is not self.ambient or D.codim != 1:
                raise ValueError(f"{D.name} is not a divisor of the ambient space")
            if m < 1:
                raise ValueError("multiplicities must be positive")
        N = len(self.branches)
        for i in range(N):
            for j in range(i + 1, N):
                if (i, j) not in self.pairs:
                    raise MissingGysinData(f"no intersection data for branches {i} and {j}")
                P = self.pairs[(i, j)]
                if P.to_i.ambient is not self.branches[i].sub or P.to_j.ambient is not self.branches[j].sub:
                    raise ValueError(f"intersection {i},{j} does not map to its branches")
                if P.to_ambient.cycle_class != self.branches[i].cycle_class * self.branches[j].cycle_class:
                    raise ValueError(f"branches {i} and {j} do not meet transversally")

    def __len__(self):
        return len(self.branches)

    def S(self, upto: Optional[int] = None):
        """sum_{i < upto} m_i [D_i]."""
        out = self.ambient.zero()
        for D, m in list(zip(self.branches, self.multiplicities))[:upto]:
            out = out + D.cycle_class * m
        return out

    def to_branch(self, i: int, j: int) -> Immersion:
        """The immersion D_ij -> D_i."""
        if i < j:
            return self.pairs[(i, j)].to_i
        return self.pairs[(j, i)].to_j

    def intersection_restrict(self, i: int, j: int, x):
        """Restriction from the ambient space to D_ij."""
        key = (min(i, j), max(i, j))
        return self.pairs[key].to_ambient.restrict(x)


@dataclass(eq=False)
class TorsionClass:
    """A class in K(X) of the form (i_branch)_* payload."""

    branch: Immersion
    payload: KClass


def mu_series(D: SNCDivisor):
    return apply_series(todd_inverse_series, D.S())


def structure_sheaf_ch(D: SNCDivisor):
    """ch(O_D) = 1 - e^{-S}."""
    return 1 - exp(-D.S())


def ch_torsion_on_branch(t: TorsionClass, series=None):
    return torsion_ch(t.branch, t.payload, series)


def _zeta_series(D: SNCDivisor, j: int):
    """The ambient class whose restriction to D_ij, times m_i, is zeta_ij (i < j)."""
    X = D.ambient
    Sj = D.S(j)
    Dj = D.branches[j].cycle_class
    mj = D.multiplicities[j]
    out = X.zero()
    for k in range(2, X.dim + 3):
        inner = X.zero()
        for l in range(1, k):
            inner = inner + Sj ** (k - 1 - l) * Dj ** (l - 1) * (comb(k - 1, l) * mj**l)
        out = out + inner * Fraction((-1) ** k, factorial(k))
    return out


def build_u_zeta(D: SNCDivisor):
    """Return (u, zeta): torsion classes u_i and the table zeta[(i, j)] for i != j."""
    N = len(D)
    u = []
    for k in range(N):
        Dk = D.branches[k]
        mk = D.multiplicities[k]
        X = D.ambient
        s = X.zero()
        for q in range(mk):
            s = s + exp(-Dk.cycle_class * q)
        amb = exp(-D.S(k)) * s
        u.append(TorsionClass(Dk, KClass(Dk.sub, mk, Dk.restrict(amb))))
    zeta = {}
    for j in range(N):
        series = _zeta_series(D, j)
        for i in range(j):
            z = D.intersection_restrict(i, j, series) * D.multiplicities[i]
            zeta[(i, j)] = z
            zeta[(j, i)] = -z
    return u, zeta


def branch_relation(D: SNCDivisor, u, zeta, i: int, series=None):
    """Both sides of the relation on branch i: (lhs, rhs) in A(D_i)."""
    Di = D.branches[i]
    mu = mu_series(D)
    lhs = u[i].payload.ch * invert_unit(todd(Di.normal, series)) - Di.restrict(mu) * D.multiplicities[i]
    rhs = Di.sub.zero()
    for j in range(len(D)):
        if j != i:
            rhs = rhs + D.to_branch(i, j).pushforward(zeta[(i, j)])
    return lhs, rhs


def combine_alpha_sides(D: SNCDivisor, alphas: Sequence, u=None, series=None):
    """Both sides of the gluing identity for classes alpha_i on the branches.

    Checks alpha_i|D_ij = alpha_j|D_ij, then returns
    (sum_i (i_{D_i})_*(alpha_i ch(u_i) td(N_i)^{-1}),
     (sum_i m_i (i_{D_i})_* alpha_i) * mu).
    """
    N = len(D)
    if len(alphas) != N:
        raise ValueError("one class per branch")
    for i in range(N):
        for j in range(i + 1, N):
            P = D.pairs[(i, j)]
            if P.to_i.restrict(alphas[i]) != P.to_j.restrict(alphas[j]):
                raise RestrictionMismatch(f"classes on branches {i} and {j} disagree on the intersection")
    if u is None:
        u, _ = build_u_zeta(D)
    lhs = D.ambient.zero()
    rhs = D.ambient.zero()
    for i, Di in enumerate(D.branches):
        lhs = lhs + Di.pushforward(alphas[i] * u[i].payload.ch * invert_unit(todd(Di.normal, series)))
        rhs = rhs + Di.pushforward(alphas[i]) * D.multiplicities[i]
    return lhs, rhs * mu_series(D)


def combine_alpha(D: SNCDivisor, alphas: Sequence, u=None, series=None):
    """Glue compatible classes alpha_i on the branches; returns the common value of both sides."""
    lhs, rhs = combine_alpha_sides(D, alphas, u, series)
    if lhs != rhs:
        raise IdentityViolation("gluing identity fails")
    return lhs


def pascal_defect(k: int, p: int) -> int:
    """C(k, p+1) - C(k-1, p); equals C(k-1, p+1), hence 0 at p = k-1."""
    return comb(k, p + 1) - comb(k - 1, p)


def coordinate_hyperplanes(n: int, multiplicities: Sequence[int], gen: str = "h") -> SNCDivisor:
    """The first len(multiplicities) coordinate hyperplanes of P^n."""
    if n < 2:
        raise ValueError("need n >= 2 for intersecting hyperplanes")
    if not 1 <= len(multiplicities) <= n + 1:
        raise ValueError("P^n has n + 1 coordinate hyperplanes")
    X = projective_space(n, gen)
    branches = [sub_linear_space(X, n - 1, gen=f"{gen}{i + 1}", name=f"D{i + 1}") for i in range(len(multiplicities))]
    pairs = {}
    for i in range(len(branches)):
        for j in range(i + 1, len(branches)):
            Dij = projective_space(n - 2, f"{gen}{i + 1}{j + 1}", name=f"D{i + 1}{j + 1}")
            to_i = sub_linear_space(branches[i].sub, n - 2, sub=Dij, name=f"D{i + 1}{j + 1}->D{i + 1}")
            to_j = sub_linear_space(branches[j].sub, n - 2, sub=Dij, name=f"D{i + 1}{j + 1}->D{j + 1}")
            pairs[(i, j)] = Intersection(Dij, to_i, to_j, compose_immersions(to_i, branches[i]))
    return SNCDivisor(X, branches, list(multiplicities), pairs)
