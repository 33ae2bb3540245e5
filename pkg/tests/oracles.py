"""Independent reference computations for the test suite.

Everything here works from plain expression values (``expr.evaluate``) and
central differences, never from the jet tapes it is used to check.
"""

import numpy as np

from akmetric import expr as E
from akmetric import catalog, generator as gen


def richardson(f, p, k, h):
    """d f / d p_k by Richardson-extrapolated central differences."""
    p = np.asarray(p)
    e = np.zeros(p.shape, p.dtype)
    e[k] = 1

    def D(s):
        return (np.asarray(f(p + s * e)) - np.asarray(f(p - s * e))) / (2 * s)

    return (4 * D(h / 2) - D(h)) / 3


def fd_grad(f, p, h=1e-3):
    return np.stack([richardson(f, p, k, h) for k in range(len(p))], axis=-1)


def fd_hess(f, p, h=1e-3):
    n = len(p)
    return np.stack([fd_grad(lambda q, j=j: richardson(f, q, j, h), p, h) for j in range(n)],
                    axis=-1)


def expr_fn(e):
    return lambda p: E.evaluate(e, p)


def metric_values(man, p):
    """Metric matrix at ``p`` from component values only."""
    n = man.dim
    if man.kind == "frame":
        Em = np.array([[E.evaluate(x, p) for x in row] for row in man.frame])
        F = np.linalg.inv(Em)
        return F @ F.T
    g = np.zeros((n, n), complex)
    for i in range(n):
        for j in range(i + 1):
            g[i, j] = g[j, i] = E.evaluate(man.component(i, j), p)
    return g


def christoffel_fd(man, p, h=1e-3):
    """Gamma^a_bc with dg from finite differences, plain loops."""
    n = man.dim
    g = metric_values(man, p)
    dg = fd_grad(lambda q: metric_values(man, q), p, h)    # dg[a,b,c] = d_c g_ab
    gi = np.linalg.inv(g)
    gam = np.zeros((n, n, n), complex)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                gam[a, b, c] = 0.5 * sum(gi[a, d] * (dg[d, c, b] + dg[d, b, c] - dg[b, c, d])
                                         for d in range(n))
    return gam


def riemann_fd(man, p, h_in=1e-3, h_out=1e-2):
    """R^a_bcd from nested differences of ``christoffel_fd``."""
    n = man.dim
    gam = christoffel_fd(man, p, h_in)
    dgam = fd_grad(lambda q: christoffel_fd(man, q, h_in), p, h_out)
    R = np.zeros((n, n, n, n), complex)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    R[a, b, c, d] = (dgam[a, b, d, c] - dgam[a, b, c, d]
                                     + sum(gam[a, e, c] * gam[e, b, d] - gam[a, e, d] * gam[e, b, c]
                                           for e in range(n)))
    return R


def interior_point(man, rng, shrink=0.5):
    """A point well inside the sample box (box coordinates mapped to coords)."""
    box = np.asarray(man.sample_box, float)
    mid = box.mean(axis=1)
    half = (box[:, 1] - box[:, 0]) / 2 * shrink
    row = mid + half * rng.uniform(-1, 1, len(box))
    if man.is_complex:
        return row[:man.dim] + 1j * row[man.dim:]
    return row


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(b))))


def corpus():
    """Catalog entries plus generated metrics used across tests."""
    out = {i: catalog.catalog_get(i) for i in catalog.default_ids()}
    out["realify(complex_sphere(2))"] = gen.realify(catalog.catalog_get("complex_sphere(2)"))
    out["realify(heisenberg)"] = gen.realify(catalog.catalog_get("heisenberg"))
    out["twin(complex_sphere(2))"] = gen.twin(catalog.catalog_get("complex_sphere(2)"))
    return out
