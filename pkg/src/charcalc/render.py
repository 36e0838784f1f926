"""Deterministic text and LaTeX printing of ring elements.

Terms are ordered by degree, then lexicographically by exponent vector in
generator declaration order (higher powers of earlier generators first).
Rationals print as ``a/b``.  The plain form is accepted by the scenario
expression parser, so rendering followed by parsing is the identity.
"""

from fractions import Fraction


def render_rational(q, latex: bool = False) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    if latex:
        sign = "-" if q < 0 else ""
        return f"{sign}\\frac{{{abs(q.numerator)}}}{{{q.denominator}}}"
    return f"{q.numerator}/{q.denominator}"


def _monomial(names, m, latex):
    parts = []
    for name, e in zip(names, m):
        if not e:
            continue
        if latex:
            base = _latex_name(name)
            parts.append(base if e == 1 else f"{base}^{{{e}}}")
        else:
            parts.append(name if e == 1 else f"{name}^{e}")
    return (" " if latex else "*").join(parts)


def _latex_name(name: str) -> str:
    if "_" in name:
        head, tail = name.split("_", 1)
        return f"{head}_{{{tail}}}"
    return name


def ordered_terms(x):
    pres = x.owner
    return sorted(
        x.terms.items(),
        key=lambda mc: (pres.monomial_degree(mc[0]), tuple(-e for e in mc[0])),
    )


def _join(pieces, latex):
    # pieces: list of (coefficient, monomial string)
    if not pieces:
        return "0"
    out = []
    for i, (c, mono) in enumerate(pieces):
        neg = c < 0
        a = -c if neg else c
        if mono:
            if a == 1:
                body = mono
            else:
                body = f"{render_rational(a, latex)}{' ' if latex else '*'}{mono}"
        else:
            body = render_rational(a, latex)
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def render(x, latex: bool = False) -> str:
    """Render a ring element, a rational, or a sequence of those."""
    if hasattr(x, "render"):
        return x.render(latex)
    if isinstance(x, (int, Fraction)):
        return render_rational(x, latex)
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(render(y, latex) for y in x) + "]"
    if hasattr(x, "owner") and hasattr(x, "terms"):
        names = x.owner.names
        return _join([(c, _monomial(names, m, latex)) for m, c in ordered_terms(x)], latex)
    return str(x)
