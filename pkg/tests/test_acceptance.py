"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json

import numpy as np
import pytest

from akmetric import antikahler as ak
from akmetric import catalog, generator as gen, geometry as geo, jets
from akmetric.cli import main as cli_main
from akmetric.manifest import load_manifest
from akmetric.verify import RunOptions, run_verify, sample_points, to_coords

from oracles import corpus, expr_fn, fd_grad, fd_hess, interior_point, rel_err, riemann_fd
from test_generator import HEIS_RICCI0, HEIS_RIEMANN0
from test_jets import _components, _random_corpus

POINTS = 64
STRUCTURAL = ["riemann_antisymmetry", "first_bianchi", "pair_symmetry",
              "first_pair_antisymmetry", "ricci_symmetry"]


@pytest.fixture
def report_line(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def _verify(man, **kw):
    return run_verify(man, RunOptions(points=POINTS, **kw))


def _max(report, *ids):
    return max(report.check(i).max_residual for i in ids)


def test_01_sphere_oracle(report_line):
    rows, ok = [], True
    for m in (2, 3, 4):
        man = catalog.catalog_get(f"sphere({m})")
        rep = _verify(man)
        ein = rep.check("einstein")
        rel = max(abs(ein.value["min"] - (m - 1)), abs(ein.value["max"] - (m - 1))) / (m - 1)
        # independent constant-curvature identity at the same points
        cc = 0.0
        for p in to_coords(man, sample_points(man, POINTS, 0)):
            c = geo.curvature_at(man, p)
            g = c.g
            want = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
            cc = max(cc, float(np.max(np.abs(c.lowered() - want))))
        ok &= rel < 1e-8 and ein.max_residual < 1e-8 and ein.points == POINTS and cc < 1e-8
        rows.append(f"m={m} gamma_rel_err={rel:.1e} resid={ein.max_residual:.1e} K-oracle={cc:.1e}")
    report_line(1, ok, "; ".join(rows))
    assert ok


def test_02_complex_sphere(report_line):
    rep = _verify(gen.realify(catalog.catalog_get("complex_sphere(2)")))
    sig, ein = rep.check("signature"), rep.check("einstein")
    ok = (sig.passed and sig.value == [2, 2] and sig.points == POINTS
          and abs(ein.value["min"] - 1) < 1e-8 and abs(ein.value["max"] - 1) < 1e-8
          and ein.max_residual < 1e-8)
    report_line(2, ok, f"signature={sig.value} at {sig.points} pts, gamma_hat={ein.value['gamma_hat']:.12f}, "
                       f"resid={ein.max_residual:.1e}")
    assert ok


def test_03_tower(report_line, tmp_path, capsys):
    out = tmp_path / "out"
    code = cli_main(["tower", "catalog:sphere(2)", "--levels", "2", "-o", str(out)])
    capsys.readouterr()
    ok, rows = code == 0, []
    for k, dim, sig in [(1, 4, [2, 2]), (2, 8, [4, 4])]:
        man = load_manifest((out / f"level{k}.json").read_bytes())
        rep = _verify(man)
        ein = rep.check("einstein")
        good = (man.dim == dim and rep.check("signature").value == sig and rep.check("signature").passed
                and abs(ein.value["min"] - 1) <= 1e-6 and abs(ein.value["max"] - 1) <= 1e-6)
        ok &= good
        rows.append(f"level{k}: dim={man.dim} sig={rep.check('signature').value} "
                    f"gamma_hat in [{ein.value['min']:.10f}, {ein.value['max']:.10f}]")
    report_line(3, ok, "; ".join(rows))
    assert ok


THREE = ["parallel_J", "complex_christoffel", "holomorphy"]
HOLO_LINEAGE = ([f"complex_sphere({m})" for m in (1, 2, 3, 4)]
                + [f"complex_torus({m})" for m in (1, 2, 3, 4)] + ["heisenberg"])


def test_04_three_way_equivalence(report_line):
    worst, ok = 0.0, True
    for cid in HOLO_LINEAGE:
        rep = _verify(gen.realify(catalog.catalog_get(cid)))
        val = _max(rep, *THREE)
        ok &= val < 1e-9 and all(rep.check(i).points == POINTS for i in THREE)
        worst = max(worst, val)
    mut = _verify(catalog.catalog_get("mutant_nonholo"))
    vals = {i: mut.check(i).max_residual for i in THREE}
    ok &= all(v > 1e-3 for v in vals.values())
    report_line(4, ok, f"holomorphic lineage max={worst:.1e} over {len(HOLO_LINEAGE)} metrics; "
                       f"mutant " + ", ".join(f"{k}={v:.3g}" for k, v in vals.items()))
    assert ok


IDENTITIES = ["curv_commutes_J", "curv_J_invariant", "curv_J_linear", "ricci_J_anti"]


def test_05_curvature_identities(report_line):
    rows, ok = [], True
    for cid in ("complex_sphere(2)", "heisenberg"):
        rep = _verify(gen.realify(catalog.catalog_get(cid)))
        val = _max(rep, *IDENTITIES)
        ok &= val < 1e-8 and all(rep.check(i).points == POINTS for i in IDENTITIES)
        rows.append(f"{cid}: max={val:.1e}")
    s2 = catalog.catalog_get("sphere(2)")
    J = ak.ComplexStructure.canonical(1)
    rng = np.random.default_rng(0)
    low = min(ak.curvature_identity_residuals(geo.curvature_at(s2, p), J, 16, rng)["curv_J_invariant"]
              for p in sample_points(s2, POINTS, 0))
    ok &= low >= 1e-2
    rows.append(f"S2 control min curv_J_invariant={low:.3g}")
    report_line(5, ok, "; ".join(rows))
    assert ok


def test_06_ricci_block_match(report_line):
    rows, ok = [], True
    for cid in ("complex_sphere(2)", "heisenberg"):
        rep = _verify(gen.realify(catalog.catalog_get(cid)))
        d, mx = rep.check("ricci_block_match"), rep.check("ricci_mixed_block")
        ok &= d.max_residual < 1e-8 and mx.max_residual < 1e-8 and d.points == mx.points == POINTS
        rows.append(f"{cid}: diff={d.max_residual:.1e} mixed={mx.max_residual:.1e}")
    report_line(6, ok, "; ".join(rows))
    assert ok


def test_07_twin(report_line):
    H = catalog.catalog_get("complex_sphere(2)")
    R, T, h = gen.realify(H), gen.twin(H), gen.holomorphic_twin(H)
    gam, ein = 0.0, 0.0
    for p in sample_points(R, POINTS, 0):
        gam = max(gam, float(np.max(np.abs(geo.curvature_at(R, p).gamma - geo.curvature_at(T, p).gamma))))
        ein = max(ein, ak.twin_einstein_residual(geo.curvature_at(h, ak.holo_point(p)), 1.0))
    ok = gam < 1e-9 and ein < 1e-8
    report_line(7, ok, f"max|Gamma(twin) - Gamma(realify)|={gam:.1e}; R(h)+i*gamma*h resid={ein:.1e}")
    assert ok


def test_08_heisenberg(report_line):
    H = catalog.catalog_get("heisenberg")
    rep_real = _verify(gen.realify(H))
    rep_holo = _verify(H)
    c = geo.curvature_at(H, np.zeros(3, complex))
    fd = riemann_fd(H, np.zeros(3, complex))
    fixture = max(float(np.max(np.abs(c.ricci - HEIS_RICCI0))),
                  max(abs(c.lowered()[k] - v) for k, v in HEIS_RIEMANN0.items()))
    fd_err = rel_err(c.riemann, fd)
    ok = rep_real.passed and rep_holo.passed and fixture < 1e-14 and fd_err < 1e-6
    failing = [x.id for x in rep_real.checks + rep_holo.checks if not x.passed]
    report_line(8, ok, f"suite checks={len(rep_real.checks)}+{len(rep_holo.checks)} failing={failing}; "
                       f"fixture err={fixture:.1e}; FD oracle rel err={fd_err:.1e}")
    assert ok


def test_09_ad_soundness(report_line):
    worst_rand = 0.0
    exprs = _random_corpus()
    for e, p in exprs:
        j = jets.eval_jet2(e, p, "real")
        pc = p.astype(complex)
        worst_rand = max(worst_rand, rel_err(j.grad, fd_grad(expr_fn(e), pc)),
                         rel_err(j.hess, fd_hess(expr_fn(e), pc)))
    worst_cat, count = 0.0, 0
    rng = np.random.default_rng(3)
    for man in corpus().values():
        field = "complex" if man.is_complex else "real"
        p = interior_point(man, rng)
        pc = np.asarray(p, complex)
        for e in _components(man):
            j = jets.eval_jet2(e, p, field)
            worst_cat = max(worst_cat, rel_err(j.grad, fd_grad(expr_fn(e), pc)),
                            rel_err(j.hess, fd_hess(expr_fn(e), pc)))
            count += 1
    ok = len(exprs) == 100 and worst_rand < 1e-6 and worst_cat < 1e-6
    report_line(9, ok, f"random exprs={len(exprs)} max rel={worst_rand:.1e}; "
                       f"catalog components={count} max rel={worst_cat:.1e}")
    assert ok


def test_10_structural(report_line):
    worst, ok, flat_max = 0.0, True, 0.0
    for name, man in corpus().items():
        rep = _verify(man)
        val = _max(rep, *STRUCTURAL)
        ok &= val < 1e-10 and all(rep.check(i).points == POINTS for i in STRUCTURAL)
        worst = max(worst, val)
        if name.startswith("flat") or name.startswith("complex_torus"):
            for p in to_coords(man, sample_points(man, POINTS, 0)):
                c = geo.curvature_at(man, p)
                flat_max = max(flat_max, float(np.max(np.abs(c.riemann))), float(np.max(np.abs(c.ricci))))
    ok &= flat_max < 1e-12
    report_line(10, ok, f"symmetry suite max={worst:.1e} over {len(corpus())} manifests; "
                        f"flat curvature max={flat_max:.1e}")
    assert ok


def test_report_json_is_strict():
    rep = _verify(catalog.catalog_get("sphere(2)"))
    json.loads(rep.to_json())
