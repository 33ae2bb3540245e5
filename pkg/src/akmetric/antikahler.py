"""Residual checks for anti-Hermitian metrics and parallel complex structures.

Real coordinates on a 2m-dimensional space are ordered ``(x^1..x^m, y^1..y^m)``
with ``z^a = x^a + i y^a``.  The canonical complex structure sends
``d/dx^a -> d/dy^a`` and ``d/dy^a -> -d/dx^a``; as a matrix acting on column
vectors ``J[mu, rho] = J^mu_rho``.

Complex components are taken in the coordinate basis
``(d/dz^a, d/dzbar^a)`` with ``d/dz = (d/dx - i d/dy)/2``, so that the
unbarred block of a realified metric reproduces the holomorphic components
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from . import jets
from .errors import OddDimension, SingularMetric
from .manifest import Manifest

J_SQUARE_TOL = 1e-12


@dataclass
class ComplexStructure:
    """Almost-complex structure on 2m real coordinates.

    Either a constant matrix ``J`` or a matrix of expressions ``exprs`` over
    the real coordinates.
    """

    m: int
    J: Optional[np.ndarray] = None
    exprs: Optional[list] = None

    @classmethod
    def canonical(cls, m: int) -> "ComplexStructure":
        return cls(m, canonical_J(m))

    def at(self, point):
        """Return ``(J, dJ)`` with ``dJ[mu, rho, nu] = d_nu J^mu_rho``."""
        n = 2 * self.m
        if self.exprs is None:
            J = np.asarray(self.J, float)
            dJ = np.zeros((n, n, n))
        else:
            flat = [e for row in self.exprs for e in row]
            tape = jets.compile_tape(flat, n)
            vals, grads, hess, status, failop = jets.run_tape(tape, np.asarray(point)[None])
            if status[0]:
                raise jets.status_error(tape, status[0], failop[0])
            J = vals[0].real.reshape(n, n)
            dJ = grads[0].real.reshape(n, n, n)
        if np.max(np.abs(J @ J + np.eye(n))) > J_SQUARE_TOL:
            raise ValueError("J^2 != -1 at this point")
        return J, dJ


def canonical_J(m: int) -> np.ndarray:
    J = np.zeros((2 * m, 2 * m))
    for a in range(m):
        J[m + a, a] = 1.0
        J[a, m + a] = -1.0
    return J


def _basis(m: int) -> np.ndarray:
    """Columns: real components of d/dz^a (first m) and d/dzbar^a (last m)."""
    eye = np.eye(m)
    top = np.hstack([eye, eye])
    bot = np.hstack([-1j * eye, 1j * eye])
    return 0.5 * np.vstack([top, bot])


def _half(n: int) -> int:
    if n % 2:
        raise OddDimension(f"dimension {n} is odd")
    return n // 2


@dataclass
class ComplexBlocks:
    g_hat: np.ndarray
    mixed: np.ndarray
    conj_defect: float


@dataclass
class ComplexChristoffel:
    gamma: np.ndarray          # Gamma^C_AB in the (dz, dzbar) basis
    forbidden: float           # max |Gamma| over mixed barred/unbarred patterns
    conj_defect: float         # max |Gamma^cbar_abar bbar - conj Gamma^c_ab|

    @property
    def holomorphic_block(self):
        m = self.gamma.shape[0] // 2
        return self.gamma[:m, :m, :m]


def anti_hermitian_residual(g, J) -> float:
    """max|J^T g J + g| / (1 + max|g|)."""
    g = np.asarray(g)
    return float(np.max(np.abs(J.T @ g @ J + g)) / (1.0 + np.max(np.abs(g))))


def complex_blocks_of(g) -> ComplexBlocks:
    """Complex components of a real symmetric 2m x 2m matrix."""
    m = _half(g.shape[0])
    P = _basis(m)
    G = P.T @ g @ P
    defect = float(np.max(np.abs(G[m:, m:] - np.conj(G[:m, :m]))))
    return ComplexBlocks(G[:m, :m], G[:m, m:], defect)


def complex_components(metric: geo.MetricAtPoint) -> ComplexBlocks:
    return complex_blocks_of(metric.g)


def _complexified(metric: geo.MetricAtPoint):
    m = _half(metric.n)
    P = _basis(m)
    G = P.T @ metric.g @ P
    # dG[A, B, C] = d_C G_AB, with d_C the Wirtinger derivative
    dG = np.einsum("ma,nb,rc,mnr->abc", P, P, P, metric.dg)
    return m, G, dG


def holomorphy_residual_at(metric: geo.MetricAtPoint) -> float:
    """max |d/dzbar^c g_ab| over a, b, c."""
    m, _, dG = _complexified(metric)
    return float(np.max(np.abs(dG[:m, :m, m:])))


def holomorphy_residual(man: Manifest, point) -> float:
    return holomorphy_residual_at(geo.evaluate_metric(man, point))


def complex_christoffel_at(metric: geo.MetricAtPoint) -> ComplexChristoffel:
    m, G, dG = _complexified(metric)
    if geo.singular(G):
        raise SingularMetric("complexified metric is singular")
    Ginv = np.linalg.inv(G)
    # T[D, A, B] = d_A G_BD + d_B G_DA - d_D G_AB
    T = dG.transpose(1, 2, 0) + dG - dG.transpose(2, 0, 1)
    gamma = 0.5 * np.einsum("cd,dab->cab", Ginv, T)
    bar = np.arange(2 * m) >= m
    allowed = (bar[:, None, None] == bar[None, :, None]) & (bar[None, :, None] == bar[None, None, :])
    forbidden = float(np.max(np.abs(gamma[~allowed])))
    defect = float(np.max(np.abs(gamma[m:, m:, m:] - np.conj(gamma[:m, :m, :m]))))
    return ComplexChristoffel(gamma, forbidden, defect)


def complex_christoffel_blocks(man: Manifest, point) -> ComplexChristoffel:
    return complex_christoffel_at(geo.evaluate_metric(man, point))


def parallel_J_residual(curv: geo.CurvatureAtPoint, J: ComplexStructure) -> float:
    """max |nabla_nu J^mu_rho|."""
    Jm, dJ = J.at(curv.metric.point)
    G = curv.gamma.real if np.iscomplexobj(curv.gamma) else curv.gamma
    nab = (dJ
           + np.einsum("mns,sr->mrn", G, Jm)
           - np.einsum("snr,ms->mrn", G, Jm))
    return float(np.max(np.abs(nab)))


def nijenhuis(J: ComplexStructure, point) -> np.ndarray:
    """N^mu_nu_rho as an array indexed [mu, nu, rho]."""
    Jm, dJ = J.at(point)
    return (np.einsum("sn,mrs->mnr", Jm, dJ)
            - np.einsum("sr,mns->mnr", Jm, dJ)
            - np.einsum("ms,snr->mnr", Jm, dJ.transpose(0, 2, 1) - dJ))


def nijenhuis_residual(J: ComplexStructure, point) -> float:
    return float(np.max(np.abs(nijenhuis(J, point))))


def curvature_identity_residuals(curv: geo.CurvatureAtPoint, J: ComplexStructure,
                                 trials: int, rng: np.random.Generator) -> dict:
    """Maxima over random (X, Y) of the four curvature/J identities.

    curv_commutes_J: R(X,Y) J - J R(X,Y);   curv_J_invariant: R(X,Y) + R(JX,JY);
    curv_J_linear:   R(JX,Y) - J R(X,Y);    ricci_J_anti:     Ric(JX,JY) + Ric(X,Y).
    """
    Jm, _ = J.at(curv.metric.point)
    R = curv.riemann
    ric = curv.ricci
    n = R.shape[0]
    rs = 1.0 + np.max(np.abs(R))
    cs = 1.0 + np.max(np.abs(ric))

    def endo(X, Y):
        return np.einsum("abcd,c,d->ab", R, X, Y)

    out = {"curv_commutes_J": 0.0, "curv_J_invariant": 0.0, "curv_J_linear": 0.0, "ricci_J_anti": 0.0}
    for _ in range(trials):
        X = rng.uniform(-1.0, 1.0, n)
        Y = rng.uniform(-1.0, 1.0, n)
        M = endo(X, Y)
        JX, JY = Jm @ X, Jm @ Y
        vals = {
            "curv_commutes_J": np.max(np.abs(M @ Jm - Jm @ M)) / rs,
            "curv_J_invariant": np.max(np.abs(M + endo(JX, JY))) / rs,
            "curv_J_linear": np.max(np.abs(endo(JX, Y) - Jm @ M)) / rs,
            "ricci_J_anti": abs(JX @ ric @ JY + X @ ric @ Y) / cs,
        }
        for k, v in vals.items():
            out[k] = max(out[k], float(v))
    return out


def block_realify(C) -> np.ndarray:
    """Real 2m x 2m matrix of ``2 Re[C_ab dz^a dz^b]`` for complex symmetric C."""
    C = np.asarray(C)
    re, im = 2.0 * C.real, 2.0 * C.imag
    return np.block([[re, -im], [-im.T, -re]])


def block_twin(C) -> np.ndarray:
    """Real 2m x 2m matrix of ``-2 Im[C_ab dz^a dz^b]``."""
    C = np.asarray(C)
    re, im = 2.0 * C.real, 2.0 * C.imag
    return np.block([[-im, -re], [-re.T, im]])


@dataclass
class RicciMatch:
    difference: float
    mixed: float


def ricci_block_match_at(curv_real: geo.CurvatureAtPoint,
                         curv_holo: geo.CurvatureAtPoint) -> RicciMatch:
    diff = np.max(np.abs(curv_real.ricci - block_realify(curv_holo.ricci)))
    mixed = np.max(np.abs(complex_blocks_of(curv_real.ricci).mixed))
    return RicciMatch(float(diff), float(mixed))


def holo_point(point) -> np.ndarray:
    """z = x + i y for a real point (x, y)."""
    p = np.asarray(point, float)
    m = _half(p.shape[0])
    return p[:m] + 1j * p[m:]


def ricci_block_match(man_real: Manifest, man_holo: Manifest, point) -> RicciMatch:
    cr = geo.curvature_at(man_real, point)
    ch = geo.curvature_at(man_holo, holo_point(point))
    return ricci_block_match_at(cr, ch)


def twin_einstein_residual(curv_twin_holo: geo.CurvatureAtPoint, gamma: float) -> float:
    """Residual of R_ab(h) = -i gamma h_ab, relative to 1 + max|h|."""
    h = curv_twin_holo.g
    return float(np.max(np.abs(curv_twin_holo.ricci + 1j * gamma * h))
                 / (1.0 + np.max(np.abs(h))))
