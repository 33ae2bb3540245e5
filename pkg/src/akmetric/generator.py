"""Manifest-to-manifest transforms: analytic continuation, realification,
twin metrics, frame metrics and Einstein towers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import expr as E
from .errors import DimensionLimit, NonAnalyticComponent, SchemaError
from .manifest import Lineage, Manifest

MAX_TOWER_DIM = 16


def complex_names(n: int) -> tuple:
    return tuple(f"z{k + 1}" for k in range(n))


def real_names(m: int) -> tuple:
    return tuple(f"x{k + 1}" for k in range(m)) + tuple(f"y{k + 1}" for k in range(m))


def complexify(man: Manifest, analytic_continuation: bool = False) -> Manifest:
    """Continue a real-analytic metric to complex coordinates ``z = x + i y``.

    Component trees are kept as they are, read over complex variables.  With
    ``analytic_continuation=True`` components containing re/im are first
    rewritten into an analytic form that agrees on real points (used for
    tower levels above the first); otherwise they are rejected.
    """
    if man.kind != "real":
        raise SchemaError(f"complexify needs a real manifest, got {man.kind}")
    comps = man.components
    if any(E.has_re_im(e) for row in comps for e in row):
        if not analytic_continuation:
            raise NonAnalyticComponent(f"{man.name}: components contain re/im")
        comps = tuple(tuple(E.eliminate_re_im(e) for e in row) for row in comps)
    imag_box = tuple((-(hi - lo) / 4.0, (hi - lo) / 4.0) for lo, hi in man.sample_box)
    return Manifest(
        name=f"complexify({man.name})",
        kind="holomorphic",
        dim=man.dim,
        coords=complex_names(man.dim),
        components=comps,
        sample_box=tuple(man.sample_box) + imag_box,
        expected_gamma=man.expected_gamma,
        lineage=Lineage(man.name, "complexify"),
    )


def _neg(e):
    return E.ZERO if E.is_const(e, 0) else E.Neg(e)


def symbolic_det(M):
    """Laplace expansion along the first row (fine for m <= 4)."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = E.ZERO
    for j in range(n):
        if E.is_const(M[0][j], 0):
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = E.mul(M[0][j], symbolic_det(minor))
        total = E.add(total, term) if j % 2 == 0 else E.sub(total, term)
    return total


def materialize(man: Manifest) -> Manifest:
    """Holomorphic components of a frame manifest by symbolic frame inversion.

    ``g = F F^T`` with ``F = E^{-1} = adj(E) / det(E)``.
    """
    if man.kind != "frame":
        return man
    Em = [list(row) for row in man.frame]
    m = man.dim
    cof = [[None] * m for _ in range(m)]
    for a in range(m):
        for mu in range(m):
            minor = [row[:mu] + row[mu + 1:] for k, row in enumerate(Em) if k != a]
            c = symbolic_det(minor) if m > 1 else E.ONE
            cof[a][mu] = c if (a + mu) % 2 == 0 else _neg(c)
    det = symbolic_det(Em)
    comps = []
    for mu in range(m):
        row = []
        for nu in range(mu + 1):
            num = E.ZERO
            for a in range(m):
                num = E.add(num, E.mul(cof[a][mu], cof[a][nu]))
            row.append(num if E.is_const(det, 1) else E.Div(num, E.PowInt(det, 2)))
        comps.append(tuple(row))
    return man.with_(kind="holomorphic", components=tuple(comps), frame=None)


def _z_substitution(m: int):
    return [E.Add(E.Var(a), E.Mul(E.Const(1j), E.Var(m + a))) for a in range(m)]


def _real_blocks(man: Manifest, xx, yy, xy):
    """Components on (x, y) from holomorphic ones; each block maps S_ab -> Expr."""
    H = materialize(man)
    m = H.dim
    memo: dict = {}
    subs = _z_substitution(m)
    S = [[E.substitute(H.component(a, b), subs, memo) for b in range(m)] for a in range(m)]
    rows = []
    for i in range(2 * m):
        row = []
        for j in range(i + 1):
            if i < m:
                row.append(xx(S[i][j]))
            elif j >= m:
                row.append(yy(S[i - m][j - m]))
            else:
                # g_{y^a x^b} = g_{x^b y^a}
                row.append(xy(S[j][i - m]))
        rows.append(tuple(row))
    return tuple(rows)


def realify(man: Manifest) -> Manifest:
    """Real metric ``2 Re[g_ab dz^a dz^b]`` on coordinates (x, y)."""
    if man.kind not in ("holomorphic", "frame"):
        raise SchemaError(f"realify needs a holomorphic or frame manifest, got {man.kind}")
    comps = _real_blocks(
        man,
        xx=lambda s: E.Mul(E.Const(2), E.Re(s)),
        yy=lambda s: E.Mul(E.Const(-2), E.Re(s)),
        xy=lambda s: E.Mul(E.Const(-2), E.Im(s)),
    )
    m = man.dim
    return Manifest(
        name=f"realify({man.name})",
        kind="real",
        dim=2 * m,
        coords=real_names(m),
        components=comps,
        sample_box=tuple(man.sample_box),
        expected_gamma=man.expected_gamma,
        expected_signature=(m, m),
        lineage=Lineage(man.name, "realify"),
    )


def twin(man: Manifest) -> Manifest:
    """Real twin metric ``-2 Im[g_ab dz^a dz^b]`` on coordinates (x, y)."""
    if man.kind not in ("holomorphic", "frame"):
        raise SchemaError(f"twin needs a holomorphic or frame manifest, got {man.kind}")
    comps = _real_blocks(
        man,
        xx=lambda s: E.Mul(E.Const(-2), E.Im(s)),
        yy=lambda s: E.Mul(E.Const(2), E.Im(s)),
        xy=lambda s: E.Mul(E.Const(-2), E.Re(s)),
    )
    m = man.dim
    return Manifest(
        name=f"twin({man.name})",
        kind="real",
        dim=2 * m,
        coords=real_names(m),
        components=comps,
        sample_box=tuple(man.sample_box),
        expected_signature=(m, m),
        lineage=Lineage(man.name, "twin"),
    )


def holomorphic_twin(man: Manifest) -> Manifest:
    """The holomorphic metric ``h_ab = i g_ab``."""
    H = materialize(man)
    comps = tuple(tuple(E.Mul(E.Const(1j), e) for e in row) for row in H.components)
    return H.with_(name=f"holotwin({man.name})", components=comps,
                   expected_gamma=None, expected_signature=None,
                   lineage=Lineage(man.name, "twin"))


@dataclass
class TowerLevel:
    level: int
    manifest: Manifest
    holomorphic: Optional[Manifest]

    @property
    def dim(self) -> int:
        return self.manifest.dim


def tower(man: Manifest, k: int) -> list:
    """Levels 0..k of the complexify-then-realify tower over ``man``."""
    if man.kind != "real":
        raise SchemaError("tower starts from a real manifest")
    if k < 1:
        raise ValueError("tower needs at least one level")
    if man.dim * 2 ** k > MAX_TOWER_DIM:
        raise DimensionLimit(f"{man.dim} * 2^{k} exceeds {MAX_TOWER_DIM}")
    if any(E.has_re_im(e) for row in man.components for e in row):
        raise NonAnalyticComponent(f"{man.name}: tower base must be re/im free")
    levels = [TowerLevel(0, man, None)]
    cur = man
    for j in range(1, k + 1):
        H = complexify(cur, analytic_continuation=True)
        R = realify(H)
        R = R.with_(name=f"tower-level-{j}({man.name})",
                    lineage=Lineage(man.name, f"tower-level-{j}"))
        levels.append(TowerLevel(j, R, H))
        cur = R
    return levels


def frame_manifest(name: str, m: int, frame, sample_box=None, coords=None,
                   expected_gamma=None) -> Manifest:
    """Metric ``f^a_mu f^a_nu`` of a holomorphic frame (``frame[a][mu] = e_a^mu``)."""
    coords = tuple(coords) if coords is not None else complex_names(m)
    frame = tuple(tuple(E.as_expr(e) for e in row) for row in frame)
    if sample_box is None:
        sample_box = ((-0.5, 0.5),) * m + ((-0.25, 0.25),) * m
    return Manifest(name=name, kind="frame", dim=m, coords=coords, frame=frame,
                    sample_box=tuple(sample_box), expected_gamma=expected_gamma)
