"""Seeded sampling and check orchestration producing a :class:`Report`."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import antikahler as ak
from . import catalog
from . import generator as gen
from . import geometry as geo
from .errors import AKError, NumericalError
from .manifest import Manifest, manifest_hash

STRUCT_TOL = 1e-10
MAX_SKIP_FRACTION = 0.2
IDENTITY_TRIALS = 16
ANTIKAHLER_LINEAGE = ("realify", "twin")


@dataclass
class RunOptions:
    points: int = 64
    seed: int = 0
    tol: float = 1e-8
    gamma_override: Optional[float] = None
    format: str = "json"

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.format not in ("json", "text"):
            raise ValueError("format is json or text")


@dataclass
class CheckRecord:
    id: str
    max_residual: float
    tol: float
    passed: bool
    points: int
    skipped: int
    value: object = None

    def to_dict(self):
        d = {"id": self.id, "max_residual": self.max_residual, "tol": self.tol,
             "pass": self.passed, "points": self.points, "skipped": self.skipped}
        if self.value is not None:
            d["value"] = self.value
        return d


@dataclass
class Report:
    name: str
    hash: str
    options: dict
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def numerical_failure(self) -> bool:
        return any(c.skipped > MAX_SKIP_FRACTION * (c.points + c.skipped) for c in self.checks)

    def check(self, cid) -> CheckRecord:
        for c in self.checks:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def exit_code(self) -> int:
        if self.numerical_failure:
            return 3
        return 0 if self.passed else 1

    def to_dict(self):
        return {"manifest": {"name": self.name, "hash": self.hash},
                "options": self.options,
                "checks": [c.to_dict() for c in self.checks],
                "pass": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_text(self) -> str:
        lines = [f"manifest {self.name} ({self.hash[:12]})"]
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            extra = f"  value={c.value}" if c.value is not None else ""
            mx = "n/a" if c.max_residual is None else f"{c.max_residual:.3e}"
            lines.append(f"{flag}  {c.id:28s} max={mx}  tol={c.tol:.1e}  "
                         f"points={c.points} skipped={c.skipped}{extra}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def _stream(seed: int, index: int, lane: int) -> np.random.Generator:
    """Generator keyed by (seed, lane, index); independent of evaluation order."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, lane, index]))


def sample_points(man: Manifest, count: int, seed: int) -> np.ndarray:
    """``count`` points uniform in ``sample_box`` (rows in box coordinates)."""
    box = np.asarray(man.sample_box, float)
    lo, hi = box[:, 0], box[:, 1]
    rows = [lo + (hi - lo) * _stream(seed, k, 0).random(len(box)) for k in range(count)]
    return np.array(rows)


def to_coords(man: Manifest, rows) -> np.ndarray:
    if not man.is_complex:
        return rows
    m = man.dim
    return rows[:, :m] + 1j * rows[:, m:]


class _Acc:
    def __init__(self, cid, tol):
        self.cid, self.tol = cid, tol
        self.values = []
        self.skipped = 0
        self.value = None

    def add(self, v):
        self.values.append(float(v))

    def record(self) -> CheckRecord:
        pts = len(self.values)
        mx = max(self.values) if self.values else float("inf")
        total = pts + self.skipped
        ok = (pts > 0 and np.isfinite(mx) and mx <= self.tol
              and self.skipped <= MAX_SKIP_FRACTION * total)
        # null in JSON when nothing could be evaluated
        return CheckRecord(self.cid, mx if np.isfinite(mx) else None, self.tol,
                           bool(ok), pts, self.skipped, self.value)


def _try(fn, *args):
    try:
        return fn(*args)
    except NumericalError as exc:
        return exc


def _curvatures(man, coords):
    out = []
    for m in geo.evaluate_metric_batch(man, coords):
        out.append(m if isinstance(m, Exception) else _try(geo.curvature, m))
    return out


def _is_antikahler_lineage(man: Manifest) -> bool:
    lin = man.lineage
    if lin is None or man.dim % 2:
        return False
    return lin.transform in ANTIKAHLER_LINEAGE or lin.transform.startswith("tower-level-")


def partner_of(man: Manifest):
    lin = man.lineage
    if lin is not None and lin.transform == "twin":
        try:
            return gen.holomorphic_twin(catalog.resolve(lin.parent))
        except AKError:
            return None
    return catalog.holomorphic_partner(man)


def run_verify(man: Manifest, opts: RunOptions = None) -> Report:
    opts = opts or RunOptions()
    rows = sample_points(man, opts.points, opts.seed)
    coords = to_coords(man, rows)
    report = Report(man.name, manifest_hash(man), {
        "points": opts.points, "seed": opts.seed, "tol": opts.tol,
        "gamma_override": opts.gamma_override, "format": opts.format})
    curvs = _curvatures(man, coords)
    gamma = opts.gamma_override if opts.gamma_override is not None else man.expected_gamma
    accs = []

    def acc(cid, tol):
        a = _Acc(cid, tol)
        accs.append(a)
        return a

    _structural(curvs, acc)
    if gamma is not None:
        _einstein(curvs, gamma, opts.tol, acc, "einstein" if not man.is_complex else "einstein_complex")
    if not man.is_complex:
        _signature(man, curvs, acc)
        if _is_antikahler_lineage(man):
            _antikahler(man, curvs, opts, acc)
            partner = partner_of(man)
            if partner is not None:
                holo = _curvatures(partner, rows[:, :man.dim // 2] + 1j * rows[:, man.dim // 2:])
                _ricci_pair(curvs, holo, opts.tol, acc)
    else:
        real = gen.realify(man)
        real_curvs = _curvatures(real, rows)
        _conj_pattern(real_curvs, curvs, opts.tol, acc)
        _ricci_pair(real_curvs, curvs, opts.tol, acc)
    report.checks = [a.record() for a in accs]
    return report


def _structural(curvs, acc):
    names = ["riemann_antisymmetry", "first_bianchi", "pair_symmetry",
             "first_pair_antisymmetry", "ricci_symmetry"]
    accs = {k: acc(k, STRUCT_TOL) for k in names}
    for c in curvs:
        if isinstance(c, Exception):
            for a in accs.values():
                a.skipped += 1
            continue
        for k, v in geo.symmetry_residuals(c).items():
            accs[k].add(v)


def _einstein(curvs, gamma, tol, acc, cid):
    a = acc(cid, tol)
    fits = []
    for c in curvs:
        if isinstance(c, Exception):
            a.skipped += 1
            continue
        fit = geo.einstein_fit(c.ricci, c.g)
        fits.append(float(fit.gamma_hat))
        a.add(max(fit.residual, abs(fit.gamma_hat - gamma) / max(1.0, abs(gamma))))
    if fits:
        a.value = {"gamma_hat": float(np.mean(fits)), "min": min(fits), "max": max(fits),
                   "expected": float(gamma)}


def _signature(man, curvs, acc):
    a = acc("signature", 0.0)
    sigs = []
    for c in curvs:
        if isinstance(c, Exception):
            a.skipped += 1
            continue
        try:
            sigs.append(geo.signature(c.g))
        except NumericalError:
            a.skipped += 1
    if not sigs:
        return
    counts = {s: sigs.count(s) for s in set(sigs)}
    target = tuple(man.expected_signature or max(counts, key=lambda s: (counts[s], s)))
    # per point: 1 when the signature differs from the target
    a.values = [float(s != target) for s in sigs]
    a.value = list(target) if len(counts) == 1 and target in counts else \
        {str(list(s)): v for s, v in sorted(counts.items())}


def _antikahler(man, curvs, opts, acc):
    m = man.dim // 2
    J = ak.ComplexStructure.canonical(m)
    tol = opts.tol
    names = ["anti_hermitian", "complex_mixed_block", "holomorphy", "parallel_J",
             "complex_christoffel", "christoffel_conj_pattern",
             "curv_commutes_J", "curv_J_invariant", "curv_J_linear", "ricci_J_anti", "nijenhuis"]
    accs = {k: acc(k, tol) for k in names}
    for idx, c in enumerate(curvs):
        if isinstance(c, Exception):
            for a in accs.values():
                a.skipped += 1
            continue
        met = c.metric
        accs["anti_hermitian"].add(ak.anti_hermitian_residual(met.g, J.J))
        blocks = ak.complex_components(met)
        scale = 1.0 + np.max(np.abs(met.g))
        accs["complex_mixed_block"].add(
            max(np.max(np.abs(blocks.mixed)), blocks.conj_defect) / scale)
        accs["holomorphy"].add(ak.holomorphy_residual_at(met))
        accs["parallel_J"].add(ak.parallel_J_residual(c, J))
        cc = _try(ak.complex_christoffel_at, met)
        if isinstance(cc, Exception):
            accs["complex_christoffel"].skipped += 1
            accs["christoffel_conj_pattern"].skipped += 1
        else:
            accs["complex_christoffel"].add(cc.forbidden)
            accs["christoffel_conj_pattern"].add(cc.conj_defect)
        ids = ak.curvature_identity_residuals(c, J, IDENTITY_TRIALS, _stream(opts.seed, idx, 1))
        for k, v in ids.items():
            accs[k].add(v)
        accs["nijenhuis"].add(ak.nijenhuis_residual(J, met.point))


def _ricci_pair(real_curvs, holo_curvs, tol, acc):
    diff = acc("ricci_block_match", tol)
    mixed = acc("ricci_mixed_block", tol)
    for cr, ch in zip(real_curvs, holo_curvs):
        if isinstance(cr, Exception) or isinstance(ch, Exception):
            diff.skipped += 1
            mixed.skipped += 1
            continue
        res = ak.ricci_block_match_at(cr, ch)
        diff.add(res.difference)
        mixed.add(res.mixed)


def _conj_pattern(real_curvs, holo_curvs, tol, acc):
    forb = acc("complex_christoffel", tol)
    pat = acc("christoffel_conj_pattern", tol)
    for cr, ch in zip(real_curvs, holo_curvs):
        if isinstance(cr, Exception) or isinstance(ch, Exception):
            forb.skipped += 1
            pat.skipped += 1
            continue
        cc = _try(ak.complex_christoffel_at, cr.metric)
        if isinstance(cc, Exception):
            forb.skipped += 1
            pat.skipped += 1
            continue
        forb.add(cc.forbidden)
        pat.add(max(cc.conj_defect, np.max(np.abs(cc.holomorphic_block - ch.gamma))))


__all__ = ["RunOptions", "Report", "CheckRecord", "run_verify", "sample_points"]
