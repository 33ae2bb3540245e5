"""Manifold-with-metric descriptions and their JSON file format."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import DimensionMismatch, HolomorphyViolation, InputError, SchemaError
from .expr import Expr, check_coords, format_expr, has_re_im, max_var_index, parse

KINDS = ("real", "holomorphic", "frame")


@dataclass(frozen=True)
class Lineage:
    parent: str
    transform: str


@dataclass(frozen=True)
class Manifest:
    """A metric given by component expressions or by a holomorphic frame.

    ``dim`` counts real coordinates for ``kind="real"`` and complex
    coordinates otherwise.  ``components`` holds the lower triangle (row ``i``
    has ``i + 1`` entries).  ``frame[a][mu]`` is the ``mu`` component of the
    ``a``-th vector field.  For complex kinds ``sample_box`` has ``2*dim``
    intervals: real parts first, then imaginary parts.
    """

    name: str
    kind: str
    dim: int
    coords: tuple
    components: Optional[tuple] = None
    frame: Optional[tuple] = None
    sample_box: tuple = ()
    expected_gamma: Optional[float] = None
    expected_signature: Optional[tuple] = None
    lineage: Optional[Lineage] = None

    def __post_init__(self):
        validate(self)

    @property
    def is_complex(self) -> bool:
        return self.kind != "real"

    @property
    def n_box(self) -> int:
        return 2 * self.dim if self.is_complex else self.dim

    def component(self, i: int, j: int) -> Expr:
        if i < j:
            i, j = j, i
        return self.components[i][j]

    def matrix(self):
        """Full symmetric matrix of component expressions."""
        n = self.dim
        return [[self.component(i, j) for j in range(n)] for i in range(n)]

    def with_(self, **changes) -> "Manifest":
        return replace(self, **changes)


def lower_triangle(rows):
    """Normalise a full or lower-triangular matrix of expressions."""
    n = len(rows)
    out = []
    for i, row in enumerate(rows):
        if len(row) == i + 1:
            out.append(tuple(row))
        elif len(row) == n:
            out.append(tuple(row[: i + 1]))
        else:
            raise DimensionMismatch(f"components row {i} has {len(row)} entries")
    for i, row in enumerate(rows):
        if len(row) == n:
            for j in range(i + 1, n):
                if len(rows[j]) == n and rows[j][i] != row[j]:
                    raise SchemaError(f"components not symmetric at ({i},{j})")
    return tuple(out)


def validate(man: Manifest) -> None:
    if man.kind not in KINDS:
        raise SchemaError(f"unknown kind {man.kind!r}")
    if not isinstance(man.dim, int) or man.dim < 1:
        raise SchemaError(f"dim must be a positive integer, got {man.dim!r}")
    try:
        check_coords(man.coords)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    if len(man.coords) != man.dim:
        raise DimensionMismatch(f"{len(man.coords)} coordinate names for dim {man.dim}")
    n = man.dim
    if man.kind == "frame":
        if man.frame is None or man.components is not None:
            raise SchemaError("frame manifests carry a frame and no components")
        if len(man.frame) != n or any(len(r) != n for r in man.frame):
            raise DimensionMismatch(f"frame must be {n}x{n}")
        exprs = [e for r in man.frame for e in r]
    else:
        if man.components is None or man.frame is not None:
            raise SchemaError(f"{man.kind} manifests carry components and no frame")
        if len(man.components) != n or any(
            len(r) != i + 1 for i, r in enumerate(man.components)
        ):
            raise DimensionMismatch(f"components must be the lower triangle of {n}x{n}")
        exprs = [e for r in man.components for e in r]
    for e in exprs:
        if not isinstance(e, Expr):
            raise SchemaError(f"component {e!r} is not an expression")
        if max_var_index(e) >= n:
            raise DimensionMismatch("expression refers to a coordinate out of range")
    if man.is_complex and any(has_re_im(e) for e in exprs):
        raise HolomorphyViolation(f"{man.name}: re/im in a {man.kind} manifest")
    if len(man.sample_box) != man.n_box:
        raise DimensionMismatch(f"sample_box needs {man.n_box} intervals")
    for lo, hi in man.sample_box:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise SchemaError(f"bad sample interval [{lo}, {hi}]")
    if man.expected_signature is not None:
        p, q = man.expected_signature
        if p < 0 or q < 0:
            raise SchemaError("signature counts must be nonnegative")


# ------------------------------------------------------------------- JSON


def to_dict(man: Manifest) -> dict:
    c = man.coords
    d = {"name": man.name, "kind": man.kind, "dim": man.dim, "coords": list(c)}
    if man.components is not None:
        d["components"] = [[format_expr(e, c) for e in row] for row in man.components]
    if man.frame is not None:
        d["frame"] = [[format_expr(e, c) for e in row] for row in man.frame]
    d["sample_box"] = [[float(lo), float(hi)] for lo, hi in man.sample_box]
    if man.expected_gamma is not None:
        d["expected_gamma"] = float(man.expected_gamma)
    if man.expected_signature is not None:
        d["expected_signature"] = list(man.expected_signature)
    if man.lineage is not None:
        d["lineage"] = {"parent": man.lineage.parent, "transform": man.lineage.transform}
    return d


def save_manifest(man: Manifest) -> bytes:
    return (json.dumps(to_dict(man), indent=2, ensure_ascii=False) + "\n").encode()


def manifest_hash(man: Manifest) -> str:
    return hashlib.sha256(save_manifest(man)).hexdigest()


def _need(d, key, types):
    if key not in d:
        raise SchemaError(f"missing field {key!r}")
    v = d[key]
    if not isinstance(v, types) or isinstance(v, bool):
        raise SchemaError(f"field {key!r} has wrong type")
    return v


def _matrix(rows, coords, what):
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise SchemaError(f"{what} must be a list of lists of strings")
    out = []
    for r in rows:
        if not all(isinstance(s, str) for s in r):
            raise SchemaError(f"{what} entries must be strings")
        out.append([parse(s, coords) for s in r])
    return out


def from_dict(d: dict) -> Manifest:
    if not isinstance(d, dict):
        raise SchemaError("manifest must be a JSON object")
    known = {"name", "kind", "dim", "coords", "components", "frame", "sample_box",
             "expected_gamma", "expected_signature", "lineage"}
    extra = set(d) - known
    if extra:
        raise SchemaError(f"unknown fields {sorted(extra)}")
    name = _need(d, "name", str)
    kind = _need(d, "kind", str)
    dim = _need(d, "dim", int)
    coords = _need(d, "coords", list)
    if not all(isinstance(c, str) for c in coords):
        raise SchemaError("coords must be strings")
    try:
        check_coords(coords)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    components = frame = None
    if "components" in d:
        components = lower_triangle(_matrix(d["components"], coords, "components"))
    if "frame" in d:
        frame = tuple(tuple(r) for r in _matrix(d["frame"], coords, "frame"))
    box = _need(d, "sample_box", list)
    try:
        box = tuple((float(lo), float(hi)) for lo, hi in box)
    except (TypeError, ValueError):
        raise SchemaError("sample_box must be a list of [lo, hi] pairs") from None
    gamma = d.get("expected_gamma")
    if gamma is not None and (not isinstance(gamma, (int, float)) or isinstance(gamma, bool)):
        raise SchemaError("expected_gamma must be a number")
    sig = d.get("expected_signature")
    if sig is not None:
        if (not isinstance(sig, list) or len(sig) != 2
                or not all(isinstance(s, int) and not isinstance(s, bool) for s in sig)):
            raise SchemaError("expected_signature must be [p, q]")
        sig = tuple(sig)
    lin = d.get("lineage")
    if lin is not None:
        if (not isinstance(lin, dict) or set(lin) != {"parent", "transform"}
                or not all(isinstance(v, str) for v in lin.values())):
            raise SchemaError("lineage must be {parent, transform}")
        lin = Lineage(lin["parent"], lin["transform"])
    return Manifest(
        name=name, kind=kind, dim=dim, coords=tuple(coords), components=components,
        frame=frame, sample_box=box,
        expected_gamma=None if gamma is None else float(gamma),
        expected_signature=sig, lineage=lin,
    )


def load_manifest(data) -> Manifest:
    """Parse manifest JSON (bytes or str)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"manifest is not UTF-8: {exc}") from None
    try:
        d = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    try:
        return from_dict(d)
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None
