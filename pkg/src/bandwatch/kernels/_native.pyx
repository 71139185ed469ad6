#cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled sampling kernels.

Draws come from numpy's own ``random_beta`` C routine, applied to the
``Generator``'s bit generator, so the stream is bit-identical to the pure
backend.  The winner scan mirrors ``np.argmax`` semantics: strictly greater
wins, ties keep the lowest row.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_beta

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "native"


cdef inline bitgen_t *_bitgen(object bit_generator) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


def sample_row(object gen, double[::1] alphas, double[::1] betas):
    """One Beta(alpha_i, beta_i) draw per model; shape ``(k,)``."""
    cdef object bg = gen.bit_generator
    cdef bitgen_t *state = _bitgen(bg)
    cdef Py_ssize_t k = alphas.shape[0]
    cdef Py_ssize_t i
    for i in range(k):
        if not (alphas[i] > 0.0 and betas[i] > 0.0):
            raise ValueError("alpha and beta must be positive")
    out = np.empty(k)
    cdef double[::1] mv = out
    with bg.lock:
        for i in range(k):
            mv[i] = random_beta(state, alphas[i], betas[i])
    return out


def mc_matrix(object gen, double[::1] alphas, double[::1] betas, Py_ssize_t g):
    """Draw a ``(k, g)`` Beta matrix plus per-column winner statistics."""
    cdef object bg = gen.bit_generator
    cdef bitgen_t *state = _bitgen(bg)
    cdef Py_ssize_t k = alphas.shape[0]
    cdef Py_ssize_t i, j, best
    cdef double v, top
    for i in range(k):
        if not (alphas[i] > 0.0 and betas[i] > 0.0):
            raise ValueError("alpha and beta must be positive")
    matrix = np.empty((k, g))
    counts = np.zeros(k, dtype=np.int64)
    colmax = np.empty(g)
    cdef double[:, ::1] m = matrix
    cdef cnp.int64_t[::1] c = counts
    cdef double[::1] cm = colmax
    with bg.lock:
        for i in range(k):
            for j in range(g):
                m[i, j] = random_beta(state, alphas[i], betas[i])
    for j in range(g):
        best = 0
        top = m[0, j]
        for i in range(1, k):
            v = m[i, j]
            if v > top:
                top = v
                best = i
        c[best] += 1
        cm[j] = top
    return matrix, counts, colmax
