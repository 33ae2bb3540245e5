"""Order-2 forward-mode differentiation.

:class:`Jet2` carries value, gradient and Hessian through arithmetic.  It
works over real or complex numpy dtypes and over a leading batch axis, so the
same code serves single points and whole sample sets.

Expressions are differentiated by compiling them into a flat :class:`Tape`
(common subexpressions shared) and running it through a kernel.  The compiled
kernel in ``_tape_core`` is used when it was built; otherwise the numpy
fallback in ``_tape_py`` runs.  Set ``AKMETRIC_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os
import weakref
from dataclasses import dataclass

import numpy as np

from . import expr as E
from .errors import (BranchCutViolation, DivisionNearZero, FieldViolation,
                     HolomorphyViolation, NumericalError)

# |b| at or below this is a division error
DIV_EPS = 1e-14
# tolerated imaginary residue of a real-field evaluation, relative to 1 + |value|
REAL_FIELD_TOL = 1e-9


class Jet2:
    """Value, gradient and Hessian of a scalar field at one or more points.

    Shapes: ``value`` (*B), ``grad`` (*B, n), ``hess`` (*B, n, n).
    """

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = np.asarray(value)
        self.grad = np.asarray(grad)
        self.hess = np.asarray(hess)

    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"

    @classmethod
    def constant(cls, c, n, batch=()):
        c = np.broadcast_to(np.asarray(c), batch)
        dt = np.result_type(c, np.float64)
        return cls(c.astype(dt), np.zeros(batch + (n,), dt), np.zeros(batch + (n, n), dt))

    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.n != self.n:
                raise ValueError("jets over different variable counts")
            return other
        return Jet2.constant(other, self.n, self.value.shape)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        o = self._coerce(other)
        a, b = self.value, o.value
        ga, gb = self.grad, o.grad
        cross = ga[..., :, None] * gb[..., None, :]
        sym = cross + np.swapaxes(cross, -1, -2)
        hess = a[..., None, None] * o.hess + b[..., None, None] * self.hess + sym
        return Jet2(a * b, a[..., None] * gb + b[..., None] * ga, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if np.any(np.abs(o.value) <= DIV_EPS):
            raise DivisionNearZero("division by a value within DIV_EPS of zero")
        inv = 1.0 / o.value
        q = self.value * inv
        gq = (self.grad - q[..., None] * o.grad) * inv[..., None]
        cross = gq[..., :, None] * o.grad[..., None, :]
        hq = self.hess - q[..., None, None] * o.hess - (cross + np.swapaxes(cross, -1, -2))
        return Jet2(q, gq, hq * inv[..., None, None])

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def chain(self, f, f1, f2):
        """Compose with a univariate function given f, f', f'' at the value."""
        g = self.grad
        hess = f2[..., None, None] * (g[..., :, None] * g[..., None, :])
        hess = hess + f1[..., None, None] * self.hess
        return Jet2(f, f1[..., None] * g, hess)

    def pow_int(self, k: int):
        a = self.value
        if k == 0:
            return Jet2.constant(np.ones_like(a), self.n, a.shape)
        if k < 0 and np.any(np.abs(a) <= DIV_EPS):
            raise DivisionNearZero("negative power of a value near zero")
        f = a ** k
        f1 = k * a ** (k - 1) if k != 1 else np.ones_like(a)
        if k == 1:
            f2 = np.zeros_like(a)
        elif k == 2:
            f2 = np.full_like(a, 2)
        else:
            f2 = k * (k - 1) * a ** (k - 2)
        return self.chain(f, f1, f2)

    def __pow__(self, k):
        return self.pow_int(int(k))

    def apply(self, name: str):
        a = self.value
        if name in ("log", "sqrt") and np.any(on_branch_cut(a)):
            raise BranchCutViolation(f"{name} argument on the nonpositive real axis")
        f, f1, f2 = ELEMENTARY[name](a)
        return self.chain(f, f1, f2)

    def real(self):
        return Jet2(self.value.real, self.grad.real, self.hess.real)

    def imag(self):
        return Jet2(self.value.imag, self.grad.imag, self.hess.imag)


def on_branch_cut(a):
    a = np.asarray(a)
    return (np.imag(a) == 0) & (np.real(a) <= 0)


def _sqrt(a):
    s = np.sqrt(a)
    return s, 0.5 / s, -0.25 / (a * s)


def _exp(a):
    e = np.exp(a)
    return e, e, e


def _log(a):
    return np.log(a), 1.0 / a, -1.0 / (a * a)


def _sin(a):
    s, c = np.sin(a), np.cos(a)
    return s, c, -s


def _cos(a):
    s, c = np.sin(a), np.cos(a)
    return c, -s, -c


def _sinh(a):
    s, c = np.sinh(a), np.cosh(a)
    return s, c, s


def _cosh(a):
    s, c = np.sinh(a), np.cosh(a)
    return c, s, c


ELEMENTARY = {"sqrt": _sqrt, "exp": _exp, "log": _log, "sin": _sin,
              "cos": _cos, "sinh": _sinh, "cosh": _cosh}


def seed(point) -> list:
    """Independent-variable jets at ``point`` (one jet per coordinate)."""
    p = np.asarray(point)
    dt = np.result_type(p, np.float64)
    p = p.astype(dt)
    n = p.shape[-1]
    batch = p.shape[:-1]
    eye = np.eye(n, dtype=dt)
    return [
        Jet2(p[..., j].copy(), np.broadcast_to(eye[j], batch + (n,)).copy(),
             np.zeros(batch + (n, n), dt))
        for j in range(n)
    ]


def jet_arith(a: Jet2, b, op: str) -> Jet2:
    """Apply a named operation: add, sub, mul, div, neg, pow_int, or a function name.

    For ``pow_int`` pass the integer exponent as ``b``.
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "neg":
        return -a
    if op == "pow_int":
        return a.pow_int(int(b))
    if op in ELEMENTARY:
        return a.apply(op)
    if op == "re":
        return a.real()
    if op == "im":
        return a.imag()
    raise ValueError(f"unknown jet operation {op!r}")


# ------------------------------------------------------------------- tapes

(OP_CONST, OP_VAR, OP_NEG, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_SQRT,
 OP_EXP, OP_LOG, OP_SIN, OP_COS, OP_SINH, OP_COSH, OP_RE, OP_IM) = range(17)

FUNC_OPS = {"sqrt": OP_SQRT, "exp": OP_EXP, "log": OP_LOG, "sin": OP_SIN,
            "cos": OP_COS, "sinh": OP_SINH, "cosh": OP_COSH}
OP_NAMES = {v: k for k, v in FUNC_OPS.items()}

STATUS_OK, STATUS_DIV, STATUS_CUT, STATUS_NONFINITE = 0, 1, 2, 3

_BIN_OPS = {E.Add: OP_ADD, E.Sub: OP_SUB, E.Mul: OP_MUL, E.Div: OP_DIV}


@dataclass
class Tape:
    """Straight-line program: rows of (opcode, arg a, arg b, immediate)."""

    n: int
    ops: np.ndarray       # (L, 4) int32
    consts: np.ndarray    # (K,) complex128
    outputs: np.ndarray   # (nout,) int32
    paths: list           # per op: path of the first AST node that produced it
    has_re_im: bool


def compile_tape(exprs, n: int, labels=None) -> Tape:
    """Flatten expressions into one tape, sharing identical subtrees."""
    ops, paths, consts = [], [], []
    const_ix = {}
    key_ix = {}
    node_ix = {}
    flags = {"re_im": False}

    def emit(key, path):
        k = key_ix.get(key)
        if k is None:
            k = len(ops)
            key_ix[key] = k
            ops.append(key)
            paths.append(path)
        return k

    def go(node, path):
        hit = node_ix.get(id(node))
        if hit is not None:
            return hit[1]
        name = type(node).__name__
        if isinstance(node, E.Const):
            v = node.value
            ck = (v.real, v.imag)
            if ck not in const_ix:
                const_ix[ck] = len(consts)
                consts.append(v)
            k = emit((OP_CONST, 0, 0, const_ix[ck]), path)
        elif isinstance(node, E.Var):
            if not 0 <= node.index < n:
                raise IndexError(f"variable {node.index} outside 0..{n - 1}")
            k = emit((OP_VAR, 0, 0, node.index), path)
        elif isinstance(node, E.BINARY):
            a = go(node.left, path + (name + ".left",))
            b = go(node.right, path + (name + ".right",))
            k = emit((_BIN_OPS[type(node)], a, b, 0), path)
        elif isinstance(node, E.PowInt):
            a = go(node.base, path + ("PowInt.base",))
            k = emit((OP_POW, a, 0, node.exp), path)
        elif isinstance(node, E.Neg):
            k = emit((OP_NEG, go(node.arg, path + ("Neg.arg",)), 0, 0), path)
        elif isinstance(node, E.Func):
            a = go(node.arg, path + (f"{node.name}.arg",))
            k = emit((FUNC_OPS[node.name], a, 0, 0), path)
        elif isinstance(node, (E.Re, E.Im)):
            flags["re_im"] = True
            a = go(node.arg, path + (name + ".arg",))
            k = emit((OP_RE if isinstance(node, E.Re) else OP_IM, a, 0, 0), path)
        else:
            raise TypeError(node)
        node_ix[id(node)] = (node, k)
        return k

    outs = []
    for j, e in enumerate(exprs):
        label = labels[j] if labels is not None else f"output[{j}]"
        outs.append(go(e, (label,)))
    if not ops:
        ops.append((OP_CONST, 0, 0, 0))
        consts.append(0j)
        paths.append(("empty",))
    return Tape(
        n=n,
        ops=np.ascontiguousarray(np.array(ops, dtype=np.int32).reshape(-1, 4)),
        consts=np.array(consts if consts else [0j], dtype=np.complex128),
        outputs=np.array(outs, dtype=np.int32),
        paths=[" > ".join(p) for p in paths],
        has_re_im=flags["re_im"],
    )


# ---------------------------------------------------------------- backends

from . import _tape_py  # noqa: E402

try:
    if os.environ.get("AKMETRIC_PURE"):
        raise ImportError("pure-Python backend forced")
    from . import _tape_core  # noqa: E402
except ImportError:
    _tape_core = None

BACKENDS = {"python": _tape_py.run_tape}
if _tape_core is not None:
    BACKENDS["compiled"] = _tape_core.run_tape
DEFAULT_BACKEND = "compiled" if _tape_core is not None else "python"


def backend_name() -> str:
    return DEFAULT_BACKEND


def run_tape(tape: Tape, points, backend=None):
    """Evaluate the tape at each row of ``points`` (P, n).

    Returns ``(values, grads, hessians, status, failed_op)`` with shapes
    (P, nout), (P, nout, n), (P, nout, n, n), (P,), (P,).
    """
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.complex128)))
    if pts.shape[1] != tape.n:
        raise ValueError(f"points have {pts.shape[1]} coordinates, tape expects {tape.n}")
    fn = BACKENDS[backend or DEFAULT_BACKEND]
    return fn(tape.ops, tape.consts, tape.outputs, pts)


_STATUS_ERRORS = {
    STATUS_DIV: DivisionNearZero,
    STATUS_CUT: BranchCutViolation,
    STATUS_NONFINITE: NumericalError,
}


def status_error(tape: Tape, status: int, op: int) -> NumericalError:
    cls = _STATUS_ERRORS.get(int(status), NumericalError)
    what = {STATUS_DIV: "division by (near) zero",
            STATUS_CUT: "argument on a branch cut",
            STATUS_NONFINITE: "non-finite value"}.get(int(status), "evaluation error")
    return cls(f"{what} at {tape.paths[int(op)]}")


def real_part_checked(vals, grads, hess):
    """Drop imaginary parts of a real-field evaluation after checking they vanish."""
    scale = 1.0 + np.abs(vals)
    bad = np.abs(vals.imag) > REAL_FIELD_TOL * scale
    bad |= np.max(np.abs(grads.imag), axis=-1) > REAL_FIELD_TOL * scale
    bad |= np.max(np.abs(hess.imag), axis=(-1, -2)) > REAL_FIELD_TOL * scale
    return vals.real, grads.real, hess.real, bad


_cache: dict = {}


def _tape_for(e: E.Expr, n: int) -> Tape:
    key = (id(e), n)
    hit = _cache.get(key)
    if hit is not None and hit[0]() is e:
        return hit[1]
    tape = compile_tape([e], n)
    try:
        _cache[key] = (weakref.ref(e), tape)
    except TypeError:
        pass
    return tape


def eval_jet2(e: E.Expr, point, field: str = "complex", backend=None) -> Jet2:
    """Jet of ``e`` at ``point``.

    ``field="real"`` takes real coordinates and returns a real jet; re/im
    nodes act componentwise on value, gradient and Hessian.
    ``field="complex"`` differentiates holomorphically in complex coordinates
    and rejects re/im.
    """
    if field not in ("real", "complex"):
        raise ValueError(f"unknown field {field!r}")
    point = np.asarray(point)
    n = point.shape[-1]
    tape = _tape_for(e, n)
    if field == "complex" and tape.has_re_im:
        raise HolomorphyViolation("re/im are not complex-differentiable")
    if field == "real" and np.iscomplexobj(point) and np.any(point.imag != 0):
        raise ValueError("real-field evaluation needs a real point")
    vals, grads, hess, status, failop = run_tape(tape, point.reshape(1, n), backend)
    if status[0] != STATUS_OK:
        raise status_error(tape, status[0], failop[0])
    v, g, h = vals[0, 0], grads[0, 0], hess[0, 0]
    if field == "real":
        v, g, h, bad = real_part_checked(v, g, h)
        if bad:
            raise FieldViolation("real-field expression produced a complex value")
    return Jet2(v, g, h)
