"""Pure-numpy kernels. Reference path, and the fallback when numba is disabled.

Each function here has a twin in ``_numba`` with the same signature and the
same arithmetic order, so the two backends agree to roundoff.
"""

import numpy as np


def poly_eval_batch(exps, coeffs, comp, ncomp, Z):
    """Evaluate stacked polynomial components at many points.

    exps: (T, n) int64 exponents, coeffs: (T,) complex, comp: (T,) int64
    component index of each term, Z: (M, n) complex. Returns (M, ncomp).
    Terms are accumulated sequentially in storage order.
    """
    M, n = Z.shape
    out = np.zeros((M, ncomp), dtype=np.complex128)
    if exps.shape[0] == 0:
        return out
    maxdeg = int(exps.max()) if exps.size else 0
    pw = np.empty((M, n, maxdeg + 1), dtype=np.complex128)
    pw[:, :, 0] = 1.0
    for e in range(1, maxdeg + 1):
        pw[:, :, e] = pw[:, :, e - 1] * Z
    for t in range(exps.shape[0]):
        term = np.full(M, coeffs[t], dtype=np.complex128)
        for v in range(n):
            e = exps[t, v]
            if e:
                term = term * pw[:, v, e]
        out[:, comp[t]] += term
    return out


def _horner(c, z):
    acc = np.full(z.shape, c[-1], dtype=np.complex128)
    for k in range(c.shape[0] - 2, -1, -1):
        acc = acc * z + c[k]
    return acc


def aberth(coeffs, z0, tol, maxit):
    """Aberth-Ehrlich simultaneous iteration (Jacobi-style updates).

    coeffs are ascending (c0 + c1 z + ...). Returns (roots, iterations).
    """
    d = coeffs.shape[0] - 1
    dc = coeffs[1:] * np.arange(1, d + 1)
    z = z0.astype(np.complex128).copy()
    it = 0
    for it in range(1, maxit + 1):
        p = _horner(coeffs, z)
        dp = _horner(dc, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        den = dp - p * s
        delta = np.where(p == 0, 0.0, p / np.where(den == 0, 1.0, den))
        z = z - delta
        if np.all(np.abs(delta) <= tol * (1.0 + np.abs(z))):
            break
    return z, it


def ball_objective_batch(p, X):
    """-log(1 - |phi_p(x)|^2) up to the p-only constant, for rows of X.

    p is complex (n,), X is real (M, 2n) with interleaved (re, im).
    Points outside the open ball get +inf.
    """
    xr = X[:, 0::2]
    xi = X[:, 1::2]
    pr = p.real
    pi = p.imag
    wr = (xr * pr + xi * pi).sum(axis=1)
    wi = (xi * pr - xr * pi).sum(axis=1)
    nx = (X * X).sum(axis=1)
    out = np.full(X.shape[0], np.inf)
    ok = nx < 1.0
    out[ok] = np.log1p(wr[ok] * wr[ok] + wi[ok] * wi[ok] - 2.0 * wr[ok]) - np.log1p(-nx[ok])
    return out


def _project(X, c, R, idx, sign, bound):
    D = X - c
    nrm = np.sqrt((D * D).sum(axis=1))
    nrm = np.where(nrm == 0.0, 1.0, nrm)
    D = D * (R / nrm)[:, None]
    if sign != 0:
        bad = (D[:, idx] + c[idx] - bound) * sign < 0.0
        if np.any(bad):
            dy = bound - c[idx]
            rest = np.sqrt(max(R * R - dy * dy, 0.0))
            Db = D[bad]
            Db[:, idx] = 0.0
            rn = np.sqrt((Db * Db).sum(axis=1))
            zero = rn == 0.0
            Db[zero, 0 if idx != 0 else 1] = 1.0
            rn = np.where(zero, 1.0, rn)
            Db = Db * (rest / rn)[:, None]
            Db[:, idx] = dy
            D[bad] = Db
    return D + c


def _grad(p, X, h):
    M, m = X.shape
    G = np.empty((M, m))
    for j in range(m):
        Xp = X.copy()
        Xm = X.copy()
        Xp[:, j] += h
        Xm[:, j] -= h
        G[:, j] = (ball_objective_batch(p, Xp) - ball_objective_batch(p, Xm)) / (2.0 * h)
    return G


def _tangent(G, X, c, R):
    N = (X - c) / R
    return G - (G * N).sum(axis=1)[:, None] * N


def sphere_descent(p, c, R, idx, sign, bound, starts, h, pos_tol, maxit):
    """Projected Barzilai-Borwein descent of the ball objective on a sphere.

    Vectorized over starts. Returns (X, f, iterations, status) with status
    0 = stalled at the noise floor or position converged, 1 = iteration cap,
    2 = non-finite objective (start abandoned).
    """
    X = _project(starts.astype(np.float64), c, R, idx, sign, bound)
    S = X.shape[0]
    f = ball_objective_batch(p, X)
    G = _tangent(_grad(p, X, h), X, c, R)
    step = np.full(S, 1e-2)
    iters = np.zeros(S, dtype=np.int64)
    status = np.ones(S, dtype=np.int64)
    active = np.isfinite(f) & np.all(np.isfinite(G), axis=1)
    status[~active] = 2
    for it in range(maxit):
        if not np.any(active):
            break
        ai = np.nonzero(active)[0]
        Xa, fa, Ga = X[ai], f[ai], G[ai]
        s = step[ai].copy()
        Xn = Xa.copy()
        fn = fa.copy()
        accepted = np.zeros(ai.size, dtype=bool)
        for _ in range(40):
            todo = ~accepted
            if not np.any(todo):
                break
            trial = _project(Xa[todo] - s[todo, None] * Ga[todo], c, R, idx, sign, bound)
            ft = ball_objective_batch(p, trial)
            dec = (Ga[todo] * (Xa[todo] - trial)).sum(axis=1)
            ok = np.isfinite(ft) & (ft <= fa[todo] - 1e-4 * dec)
            ti = np.nonzero(todo)[0]
            Xn[ti[ok]] = trial[ok]
            fn[ti[ok]] = ft[ok]
            accepted[ti[ok]] = True
            s[ti[~ok]] *= 0.5
        iters[ai] = it + 1
        stalled = ~accepted
        status[ai[stalled]] = 0
        active[ai[stalled]] = False
        go = np.nonzero(accepted)[0]
        if go.size == 0:
            continue
        gi = ai[go]
        dx = Xn[go] - Xa[go]
        Gn = _tangent(_grad(p, Xn[go], h), Xn[go], c, R)
        dg = Gn - Ga[go]
        sy = (dx * dg).sum(axis=1)
        ss = (dx * dx).sum(axis=1)
        good = sy > 0.0
        newstep = np.where(good, ss / np.where(good, sy, 1.0), 2.0 * s[go])
        step[gi] = np.clip(newstep, 1e-14, 1e4)
        X[gi] = Xn[go]
        f[gi] = fn[go]
        G[gi] = Gn
        done = np.sqrt(ss) < pos_tol
        status[gi[done]] = 0
        active[gi[done]] = False
        dead = ~np.all(np.isfinite(Gn), axis=1)
        status[gi[dead]] = 2
        active[gi[dead]] = False
    return X, f, iters, status
