"""Built-in metric families used as the test corpus and CLI starting points.

Ids look like ``sphere(2)``, ``flat(2,0)``, ``heisenberg``.  Names produced by
the generator (``realify(complex_sphere(2))``, ``tower-level-2(sphere(2))``)
are resolved by replaying the transforms, see :func:`resolve`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import expr as E
from . import generator as gen
from .errors import ParamOutOfRange, UnknownEntry
from .manifest import Lineage, Manifest

MAX_M = 4


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    params: str
    description: str
    notes: str


ENTRIES = {
    "flat": CatalogEntry("flat", "p, q >= 0, 1 <= p+q <= 16",
                         "constant diagonal metric with p plus and q minus signs",
                         "zero curvature; gamma 0"),
    "sphere": CatalogEntry("sphere", "1 <= m <= 4",
                           "unit sphere chart g = delta + (x.dx)^2/(1 - |x|^2)",
                           "gamma = m - 1 from the constant-curvature identity"),
    "hyperbolic": CatalogEntry("hyperbolic", "1 <= m <= 4",
                               "hyperboloid chart g = delta - (x.dx)^2/(1 + |x|^2)",
                               "gamma = -(m - 1)"),
    "complex_sphere": CatalogEntry("complex_sphere", "1 <= m <= 4",
                                   "analytic continuation of sphere(m)",
                                   "holomorphic; gamma = m - 1"),
    "complex_torus": CatalogEntry("complex_torus", "1 <= m <= 4",
                                  "identity holomorphic frame", "flat; gamma 0"),
    "heisenberg": CatalogEntry("heisenberg", "none",
                               "frame d1, d2, z1 d2 + d3 on C^3",
                               "parallelisable; not Einstein"),
    "mutant_nonholo": CatalogEntry("mutant_nonholo", "1 <= m <= 4 (default 2)",
                                   "realified complex_torus(m) with g_11 += 0.1 re(z1)",
                                   "negative control: not holomorphic"),
}


def _xs(n):
    return [E.Var(k) for k in range(n)]


def _names(n):
    return tuple(f"x{k + 1}" for k in range(n))


def _quadric_chart(m, sign):
    """delta_ab + sign * x_a x_b / (1 - sign*|x|^2)."""
    x = _xs(m)
    r2 = x[0] * x[0]
    for v in x[1:]:
        r2 = r2 + v * v
    den = E.Sub(E.ONE, r2) if sign > 0 else E.Add(E.ONE, r2)
    rows = []
    for a in range(m):
        row = []
        for b in range(a + 1):
            q = E.Div(E.Mul(x[a], x[b]), den)
            if a == b:
                row.append(E.Add(E.ONE, q) if sign > 0 else E.Sub(E.ONE, q))
            else:
                row.append(q if sign > 0 else E.Neg(q))
        rows.append(tuple(row))
    return tuple(rows)


def _check_m(m, lo=1, hi=MAX_M):
    if not isinstance(m, int) or not lo <= m <= hi:
        raise ParamOutOfRange(f"m = {m!r} outside [{lo}, {hi}]")


def flat(p: int, q: int = 0) -> Manifest:
    if p < 0 or q < 0 or not 1 <= p + q <= 16:
        raise ParamOutOfRange(f"flat({p},{q}) out of range")
    n = p + q
    comps = tuple(
        tuple(E.Const(1 if i < p else -1) if i == j else E.ZERO for j in range(i + 1))
        for i in range(n)
    )
    return Manifest(name=f"flat({p},{q})", kind="real", dim=n, coords=_names(n),
                    components=comps, sample_box=((-1.0, 1.0),) * n,
                    expected_gamma=0.0, expected_signature=(p, q))


def sphere(m: int) -> Manifest:
    _check_m(m)
    return Manifest(name=f"sphere({m})", kind="real", dim=m, coords=_names(m),
                    components=_quadric_chart(m, +1), sample_box=((-0.4, 0.4),) * m,
                    expected_gamma=float(m - 1), expected_signature=(m, 0))


def hyperbolic(m: int) -> Manifest:
    _check_m(m)
    return Manifest(name=f"hyperbolic({m})", kind="real", dim=m, coords=_names(m),
                    components=_quadric_chart(m, -1), sample_box=((-0.8, 0.8),) * m,
                    expected_gamma=-float(m - 1), expected_signature=(m, 0))


def complex_sphere(m: int) -> Manifest:
    _check_m(m)
    base = sphere(m)
    return gen.complexify(base).with_(name=f"complex_sphere({m})",
                                      lineage=Lineage(base.name, "complexify"))


def complex_torus(m: int) -> Manifest:
    _check_m(m)
    frame = [[E.ONE if a == mu else E.ZERO for mu in range(m)] for a in range(m)]
    return gen.frame_manifest(f"complex_torus({m})", m, frame, expected_gamma=0.0)


def heisenberg() -> Manifest:
    z = _xs(3)
    one, zero = E.ONE, E.ZERO
    frame = [[one, zero, zero], [zero, one, zero], [zero, z[0], one]]
    return gen.frame_manifest("heisenberg", 3, frame)


def mutant_nonholo(m: int = 2) -> Manifest:
    _check_m(m)
    torus = complex_torus(m)
    R = gen.realify(torus)
    comps = [list(row) for row in R.components]
    # g_11 of the holomorphic block gets + 0.1 re(z1); re(z1) = x1 on the real side
    bump = E.Mul(E.Const(0.1), E.Var(0))
    comps[0][0] = E.Mul(E.Const(2), E.Re(E.Add(E.ONE, bump)))
    comps[m][m] = E.Mul(E.Const(-2), E.Re(E.Add(E.ONE, bump)))
    return R.with_(name=f"mutant_nonholo({m})" if m != 2 else "mutant_nonholo",
                   components=tuple(tuple(r) for r in comps),
                   expected_gamma=None,
                   lineage=Lineage(torus.name, "realify"))


_BUILDERS = {
    "flat": flat,
    "sphere": sphere,
    "hyperbolic": hyperbolic,
    "complex_sphere": complex_sphere,
    "complex_torus": complex_torus,
    "heisenberg": heisenberg,
    "mutant_nonholo": mutant_nonholo,
}

_ID = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([-0-9,\s]*)\s*\))?\s*$")


def parse_id(text: str):
    m = _ID.match(text)
    if not m or m.group(1) not in _BUILDERS:
        raise UnknownEntry(f"unknown catalog entry {text!r}")
    args = m.group(2)
    params = ()
    if args is not None and args.strip():
        try:
            params = tuple(int(a) for a in args.split(","))
        except ValueError:
            raise ParamOutOfRange(f"bad parameters in {text!r}") from None
    return m.group(1), params


def catalog_get(entry: str, params=None) -> Manifest:
    """Build a catalog manifest from ``"sphere(2)"`` or ``("sphere", (2,))``."""
    if params is None:
        name, params = parse_id(entry)
    else:
        name = entry
        if name not in _BUILDERS:
            raise UnknownEntry(f"unknown catalog entry {entry!r}")
    try:
        return _BUILDERS[name](*params)
    except TypeError:
        raise ParamOutOfRange(f"{name} does not take parameters {params}") from None


def default_ids() -> list:
    """One representative id per family (the corpus used by the test suite)."""
    return ["flat(2,0)", "flat(2,2)", "sphere(2)", "sphere(3)", "sphere(4)",
            "hyperbolic(2)", "hyperbolic(3)", "complex_sphere(2)", "complex_sphere(3)",
            "complex_torus(2)", "heisenberg", "mutant_nonholo"]


_TRANSFORM = re.compile(r"^(complexify|realify|twin|holotwin|tower-level-(\d+))\((.*)\)$")


def resolve(name: str) -> Manifest:
    """Rebuild a manifest from a catalog id or a generator-produced name."""
    m = _TRANSFORM.match(name.strip())
    if m is None:
        return catalog_get(name)
    op, level, inner = m.group(1), m.group(2), m.group(3)
    base = resolve(inner)
    if op == "complexify":
        return gen.complexify(base, analytic_continuation=True)
    if op == "realify":
        return gen.realify(base)
    if op == "twin":
        return gen.twin(base)
    if op == "holotwin":
        return gen.holomorphic_twin(base)
    return gen.tower(base, int(level))[-1].manifest


def holomorphic_partner(man: Manifest):
    """The holomorphic metric a realified manifest came from, if recoverable."""
    lin = man.lineage
    if man.kind != "real" or lin is None:
        return None
    try:
        if lin.transform == "realify":
            return resolve(lin.parent)
        m = re.fullmatch(r"tower-level-(\d+)", lin.transform)
        if m:
            return gen.tower(resolve(lin.parent), int(m.group(1)))[-1].holomorphic
    except (UnknownEntry, ParamOutOfRange):
        return None
    return None
