# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tape interpreter for order-2 jets over complex scalars.

Same contract as ``_tape_py.run_tape``.  Hessians are propagated as packed
lower triangles (exactly symmetric) and unpacked on output.  Opcodes and
status codes must match ``jets.py``.
"""

import numpy as np

from libc.complex cimport cexp, clog, csqrt, csin, ccos, csinh, ccosh, cabs, creal, cimag
from libc.math cimport isfinite
from libc.stdlib cimport malloc, free

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_SQRT = 8
    OP_EXP = 9
    OP_LOG = 10
    OP_SIN = 11
    OP_COS = 12
    OP_SINH = 13
    OP_COSH = 14
    OP_RE = 15
    OP_IM = 16

cdef enum:
    ST_OK = 0
    ST_DIV = 1
    ST_CUT = 2
    ST_NONFINITE = 3

cdef double DIV_EPS = 1e-14


cdef inline double complex ipow(double complex a, long k) nogil:
    cdef double complex r = 1.0
    cdef double complex b = a
    cdef long e = k if k >= 0 else -k
    while e:
        if e & 1:
            r = r * b
        b = b * b
        e >>= 1
    if k < 0:
        r = 1.0 / r
    return r


cdef inline bint on_cut(double complex a) nogil:
    return cimag(a) == 0.0 and creal(a) <= 0.0


cdef inline void chain(double complex* r, double complex* A, double complex f,
                       double complex f1, double complex f2, int n) nogil:
    cdef int i, j, t
    cdef double complex* gA = A + 1
    cdef double complex* hA = A + 1 + n
    cdef double complex* hr = r + 1 + n
    r[0] = f
    for i in range(n):
        r[1 + i] = f1 * gA[i]
    t = 0
    for i in range(n):
        for j in range(i + 1):
            hr[t] = f2 * gA[i] * gA[j] + f1 * hA[t]
            t += 1


cdef int run_point(const int[:, ::1] ops, const double complex[::1] consts,
                   const double complex* point, double complex* W, int n, int S,
                   int* failop) nogil:
    cdef int L = ops.shape[0]
    cdef int T = n * (n + 1) // 2
    cdef int k, op, a, b, i, j, t
    cdef long imm
    cdef double complex *r
    cdef double complex *A
    cdef double complex *B
    cdef double complex va, vb, q, inv, f, f1, f2, s, c
    for k in range(L):
        op = ops[k, 0]
        a = ops[k, 1]
        b = ops[k, 2]
        imm = ops[k, 3]
        r = W + <Py_ssize_t>k * S
        A = W + <Py_ssize_t>a * S
        B = W + <Py_ssize_t>b * S
        if op == OP_CONST:
            r[0] = consts[imm]
            for i in range(1, S):
                r[i] = 0
        elif op == OP_VAR:
            r[0] = point[imm]
            for i in range(1, S):
                r[i] = 0
            r[1 + imm] = 1
        elif op == OP_NEG:
            for i in range(S):
                r[i] = -A[i]
        elif op == OP_ADD:
            for i in range(S):
                r[i] = A[i] + B[i]
        elif op == OP_SUB:
            for i in range(S):
                r[i] = A[i] - B[i]
        elif op == OP_MUL:
            va = A[0]
            vb = B[0]
            r[0] = va * vb
            for i in range(n):
                r[1 + i] = va * B[1 + i] + vb * A[1 + i]
            t = 1 + n
            for i in range(n):
                for j in range(i + 1):
                    r[t] = va * B[t] + vb * A[t] + (A[1 + i] * B[1 + j] + B[1 + i] * A[1 + j])
                    t += 1
        elif op == OP_DIV:
            vb = B[0]
            if cabs(vb) <= DIV_EPS:
                failop[0] = k
                return ST_DIV
            inv = 1.0 / vb
            q = A[0] * inv
            r[0] = q
            for i in range(n):
                r[1 + i] = (A[1 + i] - q * B[1 + i]) * inv
            t = 1 + n
            for i in range(n):
                for j in range(i + 1):
                    r[t] = (A[t] - q * B[t] - (r[1 + i] * B[1 + j] + B[1 + i] * r[1 + j])) * inv
                    t += 1
        elif op == OP_POW:
            va = A[0]
            if imm == 0:
                r[0] = 1
                for i in range(1, S):
                    r[i] = 0
            else:
                if imm < 0 and cabs(va) <= DIV_EPS:
                    failop[0] = k
                    return ST_DIV
                f = ipow(va, imm)
                if imm == 1:
                    f1 = 1
                    f2 = 0
                elif imm == 2:
                    f1 = 2 * va
                    f2 = 2
                else:
                    f1 = imm * ipow(va, imm - 1)
                    f2 = imm * (imm - 1) * ipow(va, imm - 2)
                chain(r, A, f, f1, f2, n)
        elif op == OP_SQRT:
            va = A[0]
            if on_cut(va):
                failop[0] = k
                return ST_CUT
            s = csqrt(va)
            chain(r, A, s, 0.5 / s, -0.25 / (va * s), n)
        elif op == OP_EXP:
            f = cexp(A[0])
            chain(r, A, f, f, f, n)
        elif op == OP_LOG:
            va = A[0]
            if on_cut(va):
                failop[0] = k
                return ST_CUT
            inv = 1.0 / va
            chain(r, A, clog(va), inv, -inv * inv, n)
        elif op == OP_SIN:
            s = csin(A[0])
            c = ccos(A[0])
            chain(r, A, s, c, -s, n)
        elif op == OP_COS:
            s = csin(A[0])
            c = ccos(A[0])
            chain(r, A, c, -s, -c, n)
        elif op == OP_SINH:
            s = csinh(A[0])
            c = ccosh(A[0])
            chain(r, A, s, c, s, n)
        elif op == OP_COSH:
            s = csinh(A[0])
            c = ccosh(A[0])
            chain(r, A, c, s, c, n)
        elif op == OP_RE:
            for i in range(S):
                r[i] = creal(A[i])
        elif op == OP_IM:
            for i in range(S):
                r[i] = cimag(A[i])
        if not (isfinite(creal(r[0])) and isfinite(cimag(r[0]))):
            failop[0] = k
            return ST_NONFINITE
    return ST_OK


def run_tape(const int[:, ::1] ops, const double complex[::1] consts,
             const int[::1] outputs, const double complex[:, ::1] points):
    cdef int P = points.shape[0]
    cdef int n = points.shape[1]
    cdef int L = ops.shape[0]
    cdef int nout = outputs.shape[0]
    cdef int S = 1 + n + n * (n + 1) // 2
    cdef int p, o, i, j, t, st, fop
    cdef double complex* W
    cdef double complex* src

    vals_a = np.zeros((P, nout), dtype=np.complex128)
    grads_a = np.zeros((P, nout, n), dtype=np.complex128)
    hess_a = np.zeros((P, nout, n, n), dtype=np.complex128)
    status_a = np.zeros(P, dtype=np.int32)
    failop_a = np.zeros(P, dtype=np.int32)
    cdef double complex[:, ::1] vals = vals_a
    cdef double complex[:, :, ::1] grads = grads_a
    cdef double complex[:, :, :, ::1] hess = hess_a
    cdef int[::1] status = status_a
    cdef int[::1] failop = failop_a

    for o in range(nout):
        if outputs[o] < 0 or outputs[o] >= L:
            raise IndexError("tape output out of range")
    for t in range(L):
        if ops[t, 0] < 0 or ops[t, 0] > OP_IM:
            raise ValueError("bad opcode")
        if ops[t, 0] == OP_CONST and not (0 <= ops[t, 3] < consts.shape[0]):
            raise IndexError("constant index out of range")
        if ops[t, 0] == OP_VAR and not (0 <= ops[t, 3] < n):
            raise IndexError("variable index out of range")
        if ops[t, 1] < 0 or ops[t, 1] >= L or ops[t, 2] < 0 or ops[t, 2] >= L:
            raise IndexError("operand index out of range")

    W = <double complex*>malloc(<size_t>L * S * sizeof(double complex))
    if W == NULL:
        raise MemoryError()
    try:
        with nogil:
            for p in range(P):
                fop = 0
                st = run_point(ops, consts, &points[p, 0], W, n, S, &fop)
                status[p] = st
                failop[p] = fop
                if st != ST_OK:
                    continue
                for o in range(nout):
                    src = W + <Py_ssize_t>outputs[o] * S
                    vals[p, o] = src[0]
                    for i in range(n):
                        grads[p, o, i] = src[1 + i]
                    t = 1 + n
                    for i in range(n):
                        for j in range(i + 1):
                            hess[p, o, i, j] = src[t]
                            hess[p, o, j, i] = src[t]
                            t += 1
    finally:
        free(W)
    return vals_a, grads_a, hess_a, status_a, failop_a
