# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_kernels_py.py`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


def hildreth(double[:, ::1] G, double[::1] q, double[::1] lam,
             int max_sweeps, double tol):
    cdef Py_ssize_t m = q.shape[0]
    cdef Py_ssize_t i, j
    cdef double gii, old, new, d, g, v, kkt = INFINITY
    cdef int sweeps = 0
    cdef double[::1] w = np.zeros(m)
    for i in range(m):
        for j in range(m):
            w[i] += G[i, j] * lam[j]
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(m):
            gii = G[i, i]
            if gii <= 0.0:
                continue
            old = lam[i]
            new = old - (w[i] - q[i]) / gii
            if new < 0.0:
                new = 0.0
            d = new - old
            if d != 0.0:
                lam[i] = new
                for j in range(m):
                    w[j] += G[i, j] * d
        kkt = 0.0
        for i in range(m):
            g = w[i] - q[i]
            if lam[i] > 0.0:
                v = fabs(g)
            elif g < 0.0:
                v = -g
            else:
                v = 0.0
            if v > kkt:
                kkt = v
        if kkt <= tol:
            break
    return sweeps, kkt


def min_norm_simplex(double[:, ::1] K, double[::1] lam, int max_iter, double tol):
    cdef Py_ssize_t m = lam.shape[0]
    cdef Py_ssize_t i, j, s, a
    cdef double quad, gap = INFINITY, away_gap, num, den, gmax, step, la
    cdef int it = 0
    cdef double[::1] grad = np.zeros(m)
    for i in range(m):
        for j in range(m):
            grad[i] += K[i, j] * lam[j]
    while it < max_iter:
        it += 1
        quad = 0.0
        for i in range(m):
            quad += lam[i] * grad[i]
        s = 0
        for i in range(1, m):
            if grad[i] < grad[s]:
                s = i
        a = -1
        for i in range(m):
            if lam[i] > 0.0 and (a < 0 or grad[i] > grad[a]):
                a = i
        gap = quad - grad[s]
        if gap <= tol:
            break
        away_gap = grad[a] - quad
        if gap >= away_gap:
            num = quad - grad[s]
            den = K[s, s] - 2.0 * grad[s] + quad
            gmax = 1.0
            if den <= 0.0:
                step = gmax
            else:
                step = num / den
                if step > gmax:
                    step = gmax
            for j in range(m):
                grad[j] += step * (K[s, j] - grad[j])
                lam[j] *= 1.0 - step
            lam[s] += step
        else:
            la = lam[a]
            if la >= 1.0:
                break
            gmax = la / (1.0 - la)
            num = grad[a] - quad
            den = quad - 2.0 * grad[a] + K[a, a]
            if den <= 0.0:
                step = gmax
            else:
                step = num / den
                if step > gmax:
                    step = gmax
            for j in range(m):
                grad[j] += step * (grad[j] - K[a, j])
                lam[j] *= 1.0 + step
            lam[a] -= step
            if lam[a] < 0.0 or step == gmax:
                lam[a] = 0.0
    return it, gap
