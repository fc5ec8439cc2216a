"""Pure-Python versions of the inner loops.

These mirror ``_ckernels.pyx`` line for line and are used when the compiled
extension is unavailable (or when ``PWSBL_PURE_PYTHON=1`` is set).
"""

import numpy as np


def hildreth(G, q, lam, max_sweeps, tol):
    """Coordinate ascent on the dual of a polyhedral projection.

    Minimizes ``0.5 * lam @ G @ lam - q @ lam`` over ``lam >= 0`` in place.
    Returns ``(sweeps, kkt)`` where ``kkt`` is the largest projected-gradient
    entry at exit.
    """
    m = len(q)
    Gl = G.tolist()
    ql = q.tolist()
    lm = lam.tolist()
    w = (G @ lam).tolist()
    sweeps = 0
    kkt = np.inf
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(m):
            gii = Gl[i][i]
            if gii <= 0.0:
                continue
            old = lm[i]
            new = old - (w[i] - ql[i]) / gii
            if new < 0.0:
                new = 0.0
            d = new - old
            if d != 0.0:
                lm[i] = new
                row = Gl[i]
                for j in range(m):
                    w[j] += row[j] * d
        kkt = 0.0
        for i in range(m):
            g = w[i] - ql[i]
            v = abs(g) if lm[i] > 0.0 else (-g if g < 0.0 else 0.0)
            if v > kkt:
                kkt = v
        if kkt <= tol:
            break
    lam[:] = lm
    return sweeps, kkt


def min_norm_simplex(K, lam, max_iter, tol):
    """Away-step Frank-Wolfe for ``min 0.5 * lam @ K @ lam`` over the simplex.

    ``K`` is the Gram matrix of the points whose convex hull is searched.
    Updates ``lam`` in place and returns ``(iterations, fw_gap)``.
    """
    m = len(lam)
    Kl = K.tolist()
    lm = lam.tolist()
    grad = (K @ lam).tolist()
    it = 0
    gap = np.inf
    while it < max_iter:
        it += 1
        quad = 0.0
        for i in range(m):
            quad += lm[i] * grad[i]
        s = 0
        for i in range(1, m):
            if grad[i] < grad[s]:
                s = i
        a = -1
        for i in range(m):
            if lm[i] > 0.0 and (a < 0 or grad[i] > grad[a]):
                a = i
        gap = quad - grad[s]
        if gap <= tol:
            break
        away_gap = grad[a] - quad
        if gap >= away_gap:
            # d = e_s - lam
            num = quad - grad[s]
            den = Kl[s][s] - 2.0 * grad[s] + quad
            gmax = 1.0
            if den <= 0.0:
                step = gmax
            else:
                step = min(num / den, gmax)
            for j in range(m):
                grad[j] += step * (Kl[s][j] - grad[j])
                lm[j] *= 1.0 - step
            lm[s] += step
        else:
            # d = lam - e_a
            la = lm[a]
            if la >= 1.0:
                break
            gmax = la / (1.0 - la)
            num = grad[a] - quad
            den = quad - 2.0 * grad[a] + Kl[a][a]
            if den <= 0.0:
                step = gmax
            else:
                step = min(num / den, gmax)
            for j in range(m):
                grad[j] += step * (grad[j] - Kl[a][j])
                lm[j] *= 1.0 + step
            lm[a] -= step
            if lm[a] < 0.0 or step == gmax:
                lm[a] = 0.0
    lam[:] = lm
    return it, gap
