import json

import numpy as np
import pytest

from akmetric import catalog, generator as gen, geometry as geo
from akmetric.errors import ParamOutOfRange, UnknownEntry
from akmetric.manifest import load_manifest, save_manifest
from akmetric.verify import RunOptions, run_verify, sample_points


@pytest.mark.parametrize("cid", catalog.default_ids())
def test_entries_validate(cid):
    man = catalog.catalog_get(cid)
    assert load_manifest(save_manifest(man)) == man


def test_catalog_examples():
    assert np.array_equal(geo.evaluate_metric(catalog.catalog_get("sphere(2)"), [0.0, 0.0]).g, np.eye(2))
    c = geo.curvature_at(catalog.catalog_get("hyperbolic(3)"), [0.2, 0.1, -0.4])
    assert abs(geo.einstein_fit(c.ricci, c.g).gamma_hat + 2) < 1e-8
    assert catalog.catalog_get("sphere", (3,)).name == "sphere(3)"


def test_catalog_errors():
    with pytest.raises(UnknownEntry):
        catalog.catalog_get("torus(2)")
    with pytest.raises(ParamOutOfRange):
        catalog.catalog_get("sphere(5)")
    with pytest.raises(ParamOutOfRange):
        catalog.catalog_get("flat(0,0)")
    with pytest.raises(ParamOutOfRange):
        catalog.catalog_get("heisenberg(2)")


NON_MUTANT = [c for c in catalog.default_ids() if not c.startswith("mutant")]


@pytest.mark.parametrize("cid", NON_MUTANT)
def test_every_entry_passes_its_suite(cid):
    report = run_verify(catalog.catalog_get(cid), RunOptions(points=64))
    failing = [c.id for c in report.checks if not c.passed]
    assert report.passed, failing


def test_realified_entries_pass_antikahler_suite():
    for cid in ["complex_sphere(2)", "complex_sphere(3)", "complex_torus(2)", "heisenberg"]:
        report = run_verify(gen.realify(catalog.catalog_get(cid)), RunOptions(points=32))
        ids = {c.id for c in report.checks}
        assert {"parallel_J", "holomorphy", "complex_christoffel", "curv_J_invariant",
                "ricci_block_match"} <= ids
        assert report.passed, [c.id for c in report.checks if not c.passed]


def test_mutant_fails_with_recorded_magnitudes():
    report = run_verify(catalog.catalog_get("mutant_nonholo"), RunOptions(points=64))
    assert not report.passed and report.exit_code() == 1
    assert report.check("holomorphy").max_residual >= 0.05 - 1e-9
    assert report.check("complex_christoffel").max_residual > 1e-3
    assert report.check("parallel_J").max_residual > 1e-3


def test_sampling_counter_based():
    man = catalog.catalog_get("sphere(3)")
    a = sample_points(man, 10, 42)
    b = sample_points(man, 20, 42)
    assert np.array_equal(a, b[:10])
    assert not np.array_equal(a, sample_points(man, 10, 43))
    box = np.asarray(man.sample_box)
    assert np.all((a >= box[:, 0]) & (a <= box[:, 1]))


def test_report_deterministic_and_schema():
    man = catalog.catalog_get("complex_sphere(2)")
    r1 = run_verify(man, RunOptions(points=16, seed=5)).to_json()
    r2 = run_verify(man, RunOptions(points=16, seed=5)).to_json()
    assert r1 == r2
    d = json.loads(r1)
    assert set(d) == {"manifest", "options", "checks", "pass"}
    assert set(d["manifest"]) == {"name", "hash"} and len(d["manifest"]["hash"]) == 64
    for c in d["checks"]:
        assert {"id", "max_residual", "tol", "pass", "points", "skipped"} <= set(c)


def test_run_options_validation():
    with pytest.raises(ValueError):
        RunOptions(points=0)
    with pytest.raises(ValueError):
        RunOptions(tol=0)


def test_gamma_override_changes_outcome():
    man = catalog.catalog_get("sphere(2)")
    assert not run_verify(man, RunOptions(points=8, gamma_override=3.0)).passed
    r = run_verify(catalog.catalog_get("heisenberg"), RunOptions(points=8, gamma_override=0.0))
    assert not r.check("einstein_complex").passed
