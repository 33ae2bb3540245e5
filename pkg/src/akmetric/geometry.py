"""Pointwise curvature of a metric given by a manifest.

Index conventions (one convention, used everywhere):

* ``dg[a, b, c] = d_c g_ab`` and ``ddg[a, b, c, d] = d_c d_d g_ab``
* ``gamma[a, b, c] = Gamma^a_bc = 1/2 g^ad (d_b g_dc + d_c g_db - d_d g_bc)``
* ``dgamma[a, b, c, e] = d_e Gamma^a_bc``
* ``riemann[a, b, c, d] = R^a_bcd = d_c G^a_bd - d_d G^a_bc + G^a_ec G^e_bd - G^a_ed G^e_bc``
* ``ricci[a, b] = R^c_acb``

All routines work over float64 or complex128 arrays.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import jets
from .errors import FieldViolation, FrameSingular, NearNullEigenvalue, SingularMetric
from .manifest import Manifest

# |det| below DET_TOL * (max row norm)^n counts as singular
DET_TOL = 1e-12
EIG_TOL = 1e-10


@dataclass
class MetricAtPoint:
    n: int
    point: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    field: str


@dataclass
class CurvatureAtPoint:
    metric: MetricAtPoint
    ginv: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: complex

    @property
    def g(self):
        return self.metric.g

    def lowered(self):
        """R_abcd = g_ae R^e_bcd."""
        return np.einsum("ae,ebcd->abcd", self.metric.g, self.riemann)


@dataclass
class EinsteinFit:
    gamma_hat: complex
    residual: float
    relative: bool = True


# --------------------------------------------------------------- evaluation

_tapes: dict = {}


def _tape(man: Manifest) -> jets.Tape:
    hit = _tapes.get(id(man))
    if hit is not None and hit[0]() is man:
        return hit[1]
    if man.kind == "frame":
        exprs = [e for row in man.frame for e in row]
        labels = [f"frame[{a}][{mu}]" for a in range(man.dim) for mu in range(man.dim)]
    else:
        exprs = [e for row in man.components for e in row]
        labels = [f"components[{i}][{j}]" for i in range(man.dim) for j in range(i + 1)]
    tape = jets.compile_tape(exprs, man.dim, labels)
    _tapes[id(man)] = (weakref.ref(man), tape)
    return tape


def _symmetric_from_lower(flat, n):
    """(P, n(n+1)/2, ...) lower-triangle rows -> (P, n, n, ...)."""
    P = flat.shape[0]
    out = np.zeros((P, n, n) + flat.shape[2:], flat.dtype)
    t = 0
    for i in range(n):
        for j in range(i + 1):
            out[:, i, j] = flat[:, t]
            out[:, j, i] = flat[:, t]
            t += 1
    return out


def singular(mat) -> bool:
    n = mat.shape[-1]
    scale = np.max(np.linalg.norm(mat, axis=-1))
    if scale == 0:
        return True
    return abs(np.linalg.det(mat)) < DET_TOL * scale ** n


def frame_metric(E, dE, ddE):
    """Metric jets of g = F F^T with F = E^{-1}, from frame jets.

    ``E[a, mu]`` is the ``mu`` component of the ``a``-th vector field.
    """
    if singular(E):
        raise FrameSingular("frame matrix is singular at this point")
    F = np.linalg.inv(E)
    m = E.shape[0]
    # dF_c = -F dE_c F
    dF = -np.einsum("ij,jkc,kl->ilc", F, dE, F)
    # ddF_cd = -F ddE_cd F + F dE_c F dE_d F + F dE_d F dE_c F
    FdE = np.einsum("ij,jkc->ikc", F, dE)            # F dE_c
    FdEF = np.einsum("ikc,kl->ilc", FdE, F)           # F dE_c F
    two = np.einsum("ikc,kld->ilcd", FdE, FdEF)       # F dE_c F dE_d F
    ddF = -np.einsum("ij,jkcd,kl->ilcd", F, ddE, F) + two + two.transpose(0, 1, 3, 2)
    g = F @ F.T
    dg = np.einsum("ikc,jk->ijc", dF, F)
    dg = dg + dg.transpose(1, 0, 2)
    ddg = np.einsum("ikcd,jk->ijcd", ddF, F) + np.einsum("ikc,jkd->ijcd", dF, dF)
    ddg = ddg + ddg.transpose(1, 0, 2, 3)
    assert g.shape == (m, m)
    return g, dg, ddg


def evaluate_metric_batch(man: Manifest, points, backend=None) -> list:
    """Evaluate metric jets at many points.

    Returns one entry per point: a :class:`MetricAtPoint` or the
    :class:`~akmetric.errors.NumericalError` that prevented evaluation.
    """
    pts = np.atleast_2d(np.asarray(points))
    n = man.dim
    field = "complex" if man.is_complex else "real"
    if pts.shape[1] != n:
        raise ValueError(f"{man.name}: points need {n} coordinates, got {pts.shape[1]}")
    tape = _tape(man)
    vals, grads, hess, status, failop = jets.run_tape(tape, pts, backend)
    bad_real = np.zeros(len(pts), bool)
    if field == "real":
        if np.iscomplexobj(pts) and np.any(pts.imag != 0):
            raise ValueError("real manifests are evaluated at real points")
        vals, grads, hess, bad = jets.real_part_checked(vals, grads, hess)
        bad_real = bad.any(axis=1)
        pts = pts.real.astype(float)
    out = []
    if man.kind == "frame":
        E = vals.reshape(-1, n, n)
        dE = grads.reshape(-1, n, n, n)
        ddE = hess.reshape(-1, n, n, n, n)
        for p in range(len(pts)):
            if status[p]:
                out.append(jets.status_error(tape, status[p], failop[p]))
                continue
            try:
                g, dg, ddg = frame_metric(E[p], dE[p], ddE[p])
            except FrameSingular as exc:
                out.append(exc)
                continue
            out.append(MetricAtPoint(n, pts[p], g, dg, ddg, field))
        return out
    G = _symmetric_from_lower(vals, n)
    dG = _symmetric_from_lower(grads, n)
    ddG = _symmetric_from_lower(hess, n)
    for p in range(len(pts)):
        if status[p]:
            out.append(jets.status_error(tape, status[p], failop[p]))
        elif bad_real[p]:
            out.append(FieldViolation(f"{man.name}: complex value in a real metric"))
        else:
            out.append(MetricAtPoint(n, pts[p], G[p], dG[p], ddG[p], field))
    return out


def evaluate_metric(man: Manifest, point, backend=None) -> MetricAtPoint:
    res = evaluate_metric_batch(man, np.asarray(point)[None, :], backend)[0]
    if isinstance(res, Exception):
        raise res
    return res


# --------------------------------------------------------------- curvature


def christoffel(m: MetricAtPoint):
    """Return ``(gamma, dgamma, ginv)``."""
    g, dg, ddg = m.g, m.dg, m.ddg
    if singular(g):
        raise SingularMetric("metric is singular at this point")
    ginv = np.linalg.inv(g)
    # T[d,b,c] = d_b g_dc + d_c g_db - d_d g_bc
    T = dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1)
    gamma = 0.5 * np.einsum("ad,dbc->abc", ginv, T)
    dT = (ddg.transpose(0, 2, 1, 3) + ddg
          - ddg.transpose(2, 0, 1, 3))
    dginv = -np.einsum("ap,pqe,qd->ade", ginv, dg, ginv)
    dgamma = 0.5 * (np.einsum("ade,dbc->abce", dginv, T)
                    + np.einsum("ad,dbce->abce", ginv, dT))
    return gamma, dgamma, ginv


def riemann(gamma, dgamma):
    """R^a_bcd from Christoffel symbols and their derivatives."""
    R = dgamma.transpose(0, 1, 3, 2) - dgamma
    GG = np.einsum("aec,ebd->abcd", gamma, gamma)
    # both parts are bitwise antisymmetric in (c, d), so is their sum
    return R + (GG - GG.transpose(0, 1, 3, 2))


def ricci(riem):
    return np.einsum("cacb->ab", riem)


def scalar_curvature(ric, ginv):
    return np.einsum("ab,ab->", ginv, ric)


def curvature(m: MetricAtPoint) -> CurvatureAtPoint:
    gamma, dgamma, ginv = christoffel(m)
    riem = riemann(gamma, dgamma)
    ric = ricci(riem)
    return CurvatureAtPoint(m, ginv, gamma, dgamma, riem, ric, scalar_curvature(ric, ginv))


def curvature_at(man: Manifest, point, backend=None) -> CurvatureAtPoint:
    return curvature(evaluate_metric(man, point, backend))


def einstein_fit(ric, g, complex_gamma: bool = False) -> EinsteinFit:
    """Least-squares ``gamma`` with ``Ric ~ gamma g`` and the leftover residual.

    The residual is ``max|Ric - gamma g| / (1 + max|g|)``.  For complex input
    the real part of the fitted constant is used unless ``complex_gamma``.
    """
    gam = np.vdot(g, ric) / np.vdot(g, g).real
    if not complex_gamma:
        gam = gam.real
    res = np.max(np.abs(ric - gam * g)) / (1.0 + np.max(np.abs(g)))
    return EinsteinFit(gam, float(res))


def signature(g, tol: float = EIG_TOL):
    """(positive, negative) eigenvalue counts of a real symmetric matrix."""
    g = np.asarray(g)
    if np.iscomplexobj(g):
        if np.any(g.imag != 0):
            raise ValueError("signature needs a real matrix")
        g = g.real
    lam = np.linalg.eigvalsh(0.5 * (g + g.T))
    big = np.max(np.abs(lam))
    if big == 0 or np.any(np.abs(lam) < tol * big):
        raise NearNullEigenvalue(f"eigenvalue near zero: {lam}")
    return int(np.sum(lam > 0)), int(np.sum(lam < 0))


def symmetry_residuals(curv: CurvatureAtPoint) -> dict:
    """Structural identities of the curvature tensors, relative residuals."""
    R = curv.riemann
    low = curv.lowered()
    ric = curv.ricci
    rs = 1.0 + np.max(np.abs(R))
    ls = 1.0 + np.max(np.abs(low))
    cs = 1.0 + np.max(np.abs(ric))
    bianchi = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
    return {
        "riemann_antisymmetry": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2))) / rs),
        "first_bianchi": float(np.max(np.abs(bianchi)) / rs),
        "pair_symmetry": float(np.max(np.abs(low - low.transpose(2, 3, 0, 1))) / ls),
        "first_pair_antisymmetry": float(np.max(np.abs(low + low.transpose(1, 0, 2, 3))) / ls),
        "ricci_symmetry": float(np.max(np.abs(ric - ric.T)) / cs),
    }


def inverse_residual(curv: CurvatureAtPoint) -> float:
    n = curv.ginv.shape[0]
    return float(np.max(np.abs(curv.ginv @ curv.g - np.eye(n))))


def max_abs(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def optional(x) -> Optional[float]:
    return None if x is None else float(x)
