# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: batched forward evaluation and the fused training step.

Contracts mirror ``pyref.py``.  The payoff is on small minibatches and deep
composed networks, where per-call numpy overhead dominates the arithmetic.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND = "c"

HINGE = 0
LOGISTIC = 1


cdef inline double _phi(int kind, double z) noexcept nogil:
    if kind == 0:  # hinge
        return 1.0 - z if z < 1.0 else 0.0
    if z >= 0.0:
        return log1p(exp(-z))
    return -z + log1p(exp(z))


cdef inline double _dphi(int kind, double z) noexcept nogil:
    cdef double e
    if kind == 0:  # hinge
        return -1.0 if z < 1.0 else 0.0
    if z >= 0.0:
        e = exp(-z)
        return -e / (1.0 + e)
    e = exp(z)
    return -1.0 / (1.0 + e)


cdef struct NetView:
    int n_maps
    int in_dim
    int max_w
    double **W
    double **b
    int *rows
    int *cols


cdef int _gather(list weights, list biases, NetView *nv) except -1:
    cdef int L1 = len(weights)
    cdef cnp.ndarray W, b
    cdef int l
    nv.n_maps = L1
    nv.W = <double **> malloc(L1 * sizeof(double *))
    nv.b = <double **> malloc(L1 * sizeof(double *))
    nv.rows = <int *> malloc(L1 * sizeof(int))
    nv.cols = <int *> malloc(L1 * sizeof(int))
    if nv.W == NULL or nv.b == NULL or nv.rows == NULL or nv.cols == NULL:
        raise MemoryError()
    nv.max_w = 0
    for l in range(L1):
        W = weights[l]
        b = biases[l]
        if W.dtype != np.float64 or not W.flags["C_CONTIGUOUS"]:
            raise ValueError("weights must be C-contiguous float64")
        if b.dtype != np.float64 or not b.flags["C_CONTIGUOUS"]:
            raise ValueError("biases must be C-contiguous float64")
        nv.W[l] = <double *> cnp.PyArray_DATA(W)
        nv.b[l] = <double *> cnp.PyArray_DATA(b)
        nv.rows[l] = W.shape[0]
        nv.cols[l] = W.shape[1]
        if W.shape[0] > nv.max_w:
            nv.max_w = W.shape[0]
        if W.shape[1] > nv.max_w:
            nv.max_w = W.shape[1]
    nv.in_dim = nv.cols[0]
    return 0


cdef void _release(NetView *nv) noexcept nogil:
    free(nv.W)
    free(nv.b)
    free(nv.rows)
    free(nv.cols)


def forward(list weights, list biases, object X):
    """Evaluate the network on a batch; returns an (n, out_dim) array."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Xa = np.ascontiguousarray(X, dtype=np.float64)
    ws = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
    bs = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
    cdef NetView nv
    _gather(ws, bs, &nv)
    if Xa.shape[1] != nv.in_dim:
        _release(&nv)
        raise ValueError("input dimension mismatch")
    cdef int n = Xa.shape[0]
    cdef int out_dim = nv.rows[nv.n_maps - 1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, out_dim), dtype=np.float64)
    cdef double *h0 = <double *> malloc(nv.max_w * sizeof(double))
    cdef double *h1 = <double *> malloc(nv.max_w * sizeof(double))
    if h0 == NULL or h1 == NULL:
        _release(&nv)
        raise MemoryError()
    cdef double *xrow
    cdef double *cur
    cdef double *nxt
    cdef double *tmp
    cdef double acc
    cdef int s, l, i, j, width
    with nogil:
        for s in range(n):
            xrow = &Xa[s, 0]
            for j in range(nv.in_dim):
                h0[j] = xrow[j]
            cur = h0
            nxt = h1
            for l in range(nv.n_maps):
                width = nv.cols[l]
                for i in range(nv.rows[l]):
                    acc = nv.b[l][i]
                    for j in range(width):
                        acc += nv.W[l][i * width + j] * cur[j]
                    if l != nv.n_maps - 1 and acc < 0.0:
                        acc = 0.0
                    nxt[i] = acc
                tmp = cur
                cur = nxt
                nxt = tmp
            for i in range(out_dim):
                out[s, i] = cur[i]
    free(h0)
    free(h1)
    _release(&nv)
    return out


def train_step(list weights, list biases, wmasks, bmasks,
               object X, object y, int kind, double lr, double clip):
    """One fused minibatch step; mutates weights/biases, returns the loss.

    Scalar-output networks only.  Masks (float 0/1 arrays, or None) pin
    pruned parameters at zero; every parameter is clipped to [-clip, clip]
    after the update.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Xa = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ya = np.ascontiguousarray(y, dtype=np.float64)
    cdef NetView nv
    _gather(weights, biases, &nv)
    cdef int L1 = nv.n_maps
    if nv.rows[L1 - 1] != 1:
        _release(&nv)
        raise ValueError("train_step requires a scalar-output network")
    if Xa.shape[1] != nv.in_dim:
        _release(&nv)
        raise ValueError("input dimension mismatch")

    gws = [np.zeros_like(arr) for arr in weights]
    gbs = [np.zeros_like(arr) for arr in biases]
    cdef NetView gv
    _gather(gws, gbs, &gv)

    cdef double **mWp = <double **> malloc(L1 * sizeof(double *))
    cdef double **mbp = <double **> malloc(L1 * sizeof(double *))
    if mWp == NULL or mbp == NULL:
        raise MemoryError()
    cdef cnp.ndarray m
    cdef int l
    for l in range(L1):
        if wmasks is None:
            mWp[l] = NULL
            mbp[l] = NULL
        else:
            m = wmasks[l]
            mWp[l] = <double *> cnp.PyArray_DATA(m)
            m = bmasks[l]
            mbp[l] = <double *> cnp.PyArray_DATA(m)

    # activation scratch: acts[l] = input to affine map l, for one sample
    cdef int n = Xa.shape[0]
    cdef double *acts = <double *> malloc((L1 + 1) * nv.max_w * sizeof(double))
    cdef double *d0 = <double *> malloc(nv.max_w * sizeof(double))
    cdef double *d1 = <double *> malloc(nv.max_w * sizeof(double))
    if acts == NULL or d0 == NULL or d1 == NULL:
        raise MemoryError()

    cdef double loss = 0.0
    cdef double acc, z, g, dval, w
    cdef double *cur
    cdef double *nxt
    cdef double *tmp
    cdef int s, i, j, width
    with nogil:
        for s in range(n):
            for j in range(nv.in_dim):
                acts[j] = Xa[s, j]
            for l in range(L1):
                width = nv.cols[l]
                for i in range(nv.rows[l]):
                    acc = nv.b[l][i]
                    for j in range(width):
                        acc += nv.W[l][i * width + j] * acts[l * nv.max_w + j]
                    if l != L1 - 1 and acc < 0.0:
                        acc = 0.0
                    acts[(l + 1) * nv.max_w + i] = acc
            z = ya[s] * acts[L1 * nv.max_w]
            loss += _phi(kind, z)
            g = _dphi(kind, z) * ya[s] / n
            d0[0] = g
            cur = d0
            nxt = d1
            for l in range(L1 - 1, -1, -1):
                width = nv.cols[l]
                for i in range(nv.rows[l]):
                    dval = cur[i]
                    if dval != 0.0:
                        gv.b[l][i] += dval
                        for j in range(width):
                            gv.W[l][i * width + j] += dval * acts[l * nv.max_w + j]
                if l > 0:
                    for j in range(width):
                        if acts[l * nv.max_w + j] > 0.0:
                            acc = 0.0
                            for i in range(nv.rows[l]):
                                acc += cur[i] * nv.W[l][i * width + j]
                            nxt[j] = acc
                        else:
                            nxt[j] = 0.0
                    tmp = cur
                    cur = nxt
                    nxt = tmp
        # parameter update
        for l in range(L1):
            width = nv.cols[l]
            for i in range(nv.rows[l]):
                for j in range(width):
                    w = nv.W[l][i * width + j] - lr * gv.W[l][i * width + j]
                    if mWp[l] != NULL:
                        w *= mWp[l][i * width + j]
                    if w > clip:
                        w = clip
                    elif w < -clip:
                        w = -clip
                    nv.W[l][i * width + j] = w
                w = nv.b[l][i] - lr * gv.b[l][i]
                if mbp[l] != NULL:
                    w *= mbp[l][i]
                if w > clip:
                    w = clip
                elif w < -clip:
                    w = -clip
                nv.b[l][i] = w
    free(acts)
    free(d0)
    free(d1)
    free(mWp)
    free(mbp)
    _release(&gv)
    _release(&nv)
    return loss / n
