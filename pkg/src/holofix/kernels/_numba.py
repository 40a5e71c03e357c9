"""numba-compiled kernels; signatures and semantics match ``_numpy``."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def poly_eval_batch(exps, coeffs, comp, ncomp, Z):
    M, n = Z.shape
    T = exps.shape[0]
    out = np.zeros((M, ncomp), dtype=np.complex128)
    if T == 0:
        return out
    maxdeg = 0
    for t in range(T):
        for v in range(n):
            if exps[t, v] > maxdeg:
                maxdeg = exps[t, v]
    pw = np.empty((n, maxdeg + 1), dtype=np.complex128)
    for m in range(M):
        for v in range(n):
            pw[v, 0] = 1.0
            for e in range(1, maxdeg + 1):
                pw[v, e] = pw[v, e - 1] * Z[m, v]
        for t in range(T):
            term = coeffs[t]
            for v in range(n):
                e = exps[t, v]
                if e:
                    term = term * pw[v, e]
            out[m, comp[t]] += term
    return out


@njit(cache=True)
def _horner(c, z):
    acc = c[c.shape[0] - 1] + 0j
    for k in range(c.shape[0] - 2, -1, -1):
        acc = acc * z + c[k]
    return acc


@njit(cache=True)
def aberth(coeffs, z0, tol, maxit):
    d = coeffs.shape[0] - 1
    dc = np.empty(d, dtype=np.complex128)
    for k in range(d):
        dc[k] = coeffs[k + 1] * (k + 1)
    z = z0.astype(np.complex128).copy()
    delta = np.zeros(d, dtype=np.complex128)
    it = 0
    for it in range(1, maxit + 1):
        for k in range(d):
            p = _horner(coeffs, z[k])
            if p == 0:
                delta[k] = 0.0
                continue
            dp = _horner(dc, z[k])
            s = 0j
            for j in range(d):
                if j != k:
                    s += 1.0 / (z[k] - z[j])
            den = dp - p * s
            if den == 0:
                den = 1.0
            delta[k] = p / den
        done = True
        for k in range(d):
            z[k] = z[k] - delta[k]
            if abs(delta[k]) > tol * (1.0 + abs(z[k])):
                done = False
        if done:
            break
    return z, it


@njit(cache=True)
def _objective(p, x):
    n = p.shape[0]
    wr = 0.0
    wi = 0.0
    nx = 0.0
    for i in range(n):
        xr = x[2 * i]
        xi = x[2 * i + 1]
        pr = p[i].real
        pi = p[i].imag
        wr += xr * pr + xi * pi
        wi += xi * pr - xr * pi
        nx += xr * xr + xi * xi
    if nx >= 1.0:
        return np.inf
    return math.log1p(wr * wr + wi * wi - 2.0 * wr) - math.log1p(-nx)


@njit(cache=True)
def ball_objective_batch(p, X):
    M = X.shape[0]
    out = np.empty(M)
    for m in range(M):
        out[m] = _objective(p, X[m])
    return out


@njit(cache=True)
def _project(x, c, R, idx, sign, bound):
    m = x.shape[0]
    d = x - c
    nrm = 0.0
    for j in range(m):
        nrm += d[j] * d[j]
    nrm = math.sqrt(nrm)
    if nrm == 0.0:
        nrm = 1.0
    for j in range(m):
        d[j] = d[j] * (R / nrm)
    if sign != 0 and (d[idx] + c[idx] - bound) * sign < 0.0:
        dy = bound - c[idx]
        rest = math.sqrt(max(R * R - dy * dy, 0.0))
        d[idx] = 0.0
        rn = 0.0
        for j in range(m):
            rn += d[j] * d[j]
        rn = math.sqrt(rn)
        if rn == 0.0:
            d[0 if idx != 0 else 1] = 1.0
            rn = 1.0
        for j in range(m):
            d[j] = d[j] * (rest / rn)
        d[idx] = dy
    return d + c


@njit(cache=True)
def _tangent_grad(p, x, c, R, h):
    m = x.shape[0]
    g = np.empty(m)
    xp = x.copy()
    for j in range(m):
        xj = x[j]
        xp[j] = xj + h
        fp = _objective(p, xp)
        xp[j] = xj - h
        fm = _objective(p, xp)
        xp[j] = xj
        g[j] = (fp - fm) / (2.0 * h)
    gn = 0.0
    for j in range(m):
        gn += g[j] * (x[j] - c[j]) / R
    for j in range(m):
        g[j] = g[j] - gn * (x[j] - c[j]) / R
    return g


@njit(cache=True)
def _finite(v):
    for j in range(v.shape[0]):
        if not math.isfinite(v[j]):
            return False
    return True


@njit(cache=True)
def sphere_descent(p, c, R, idx, sign, bound, starts, h, pos_tol, maxit):
    S, m = starts.shape
    X = np.empty((S, m))
    f = np.empty(S)
    iters = np.zeros(S, dtype=np.int64)
    status = np.ones(S, dtype=np.int64)
    for s_i in range(S):
        x = _project(starts[s_i].astype(np.float64), c, R, idx, sign, bound)
        fx = _objective(p, x)
        g = _tangent_grad(p, x, c, R, h)
        step = 1e-2
        if not (math.isfinite(fx) and _finite(g)):
            status[s_i] = 2
            X[s_i] = x
            f[s_i] = fx
            continue
        for it in range(maxit):
            s = step
            accepted = False
            xn = x
            fn = fx
            for _ in range(40):
                trial = _project(x - s * g, c, R, idx, sign, bound)
                ft = _objective(p, trial)
                dec = 0.0
                for j in range(m):
                    dec += g[j] * (x[j] - trial[j])
                if math.isfinite(ft) and ft <= fx - 1e-4 * dec:
                    xn = trial
                    fn = ft
                    accepted = True
                    break
                s *= 0.5
            iters[s_i] = it + 1
            if not accepted:
                status[s_i] = 0
                break
            dx = xn - x
            gn = _tangent_grad(p, xn, c, R, h)
            sy = 0.0
            ss = 0.0
            for j in range(m):
                sy += dx[j] * (gn[j] - g[j])
                ss += dx[j] * dx[j]
            if sy > 0.0:
                step = ss / sy
            else:
                step = 2.0 * s
            step = min(max(step, 1e-14), 1e4)
            x = xn
            fx = fn
            g = gn
            if math.sqrt(ss) < pos_tol:
                status[s_i] = 0
                break
            if not _finite(gn):
                status[s_i] = 2
                break
        X[s_i] = x
        f[s_i] = fx
    return X, f, iters, status
