"""Pure numpy tape interpreter, vectorised over sample points.

Mirrors ``_tape_core.run_tape``.  A point that fails an operation gets its
status recorded and the offending operand replaced by a harmless value, so the
remaining points keep going.
"""

import numpy as np

from . import jets as J


def run_tape(ops, consts, outputs, points):
    P, n = points.shape
    status = np.zeros(P, np.int32)
    failop = np.zeros(P, np.int32)
    slots = []

    def fail(mask, code, k):
        fresh = mask & (status == 0)
        status[fresh] = code
        failop[fresh] = k

    for k, (op, a, b, imm) in enumerate(ops.tolist()):
        if op == J.OP_CONST:
            r = J.Jet2.constant(np.full(P, consts[imm]), n, (P,))
        elif op == J.OP_VAR:
            g = np.zeros((P, n), complex)
            g[:, imm] = 1
            r = J.Jet2(points[:, imm].copy(), g, np.zeros((P, n, n), complex))
        elif op == J.OP_NEG:
            r = -slots[a]
        elif op == J.OP_ADD:
            r = slots[a] + slots[b]
        elif op == J.OP_SUB:
            r = slots[a] - slots[b]
        elif op == J.OP_MUL:
            r = slots[a] * slots[b]
        elif op == J.OP_DIV:
            den = slots[b]
            bad = np.abs(den.value) <= J.DIV_EPS
            if bad.any():
                fail(bad, J.STATUS_DIV, k)
                den = J.Jet2(np.where(bad, 1.0, den.value), den.grad, den.hess)
            r = slots[a] / den
        elif op == J.OP_POW:
            base = slots[a]
            if imm < 0:
                bad = np.abs(base.value) <= J.DIV_EPS
                if bad.any():
                    fail(bad, J.STATUS_DIV, k)
                    base = J.Jet2(np.where(bad, 1.0, base.value), base.grad, base.hess)
            r = base.pow_int(imm)
        elif op in J.OP_NAMES:
            arg = slots[a]
            if op in (J.OP_LOG, J.OP_SQRT):
                bad = J.on_branch_cut(arg.value)
                if bad.any():
                    fail(bad, J.STATUS_CUT, k)
                    arg = J.Jet2(np.where(bad, 1.0, arg.value), arg.grad, arg.hess)
            with np.errstate(all="ignore"):
                r = arg.apply(J.OP_NAMES[op])
        elif op == J.OP_RE:
            s = slots[a]
            r = J.Jet2(s.value.real + 0j, s.grad.real + 0j, s.hess.real + 0j)
        elif op == J.OP_IM:
            s = slots[a]
            r = J.Jet2(s.value.imag + 0j, s.grad.imag + 0j, s.hess.imag + 0j)
        else:
            raise ValueError(f"bad opcode {op}")
        bad = ~np.isfinite(r.value)
        if bad.any():
            fail(bad, J.STATUS_NONFINITE, k)
        slots.append(r)

    outs = [slots[o] for o in outputs.tolist()]
    vals = np.stack([o.value for o in outs], axis=1).astype(complex)
    grads = np.stack([o.grad for o in outs], axis=1).astype(complex)
    hess = np.stack([o.hess for o in outs], axis=1).astype(complex)
    failed = status != 0
    vals[failed] = 0
    grads[failed] = 0
    hess[failed] = 0
    return vals, grads, hess, status, failop
