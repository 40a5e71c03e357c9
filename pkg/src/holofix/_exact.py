"""Exact zero-testing of polynomial-map chains by modular evaluation.

Every float64 value is a dyadic rational, so a chain of PolyMaps evaluated at
float inputs has an exact value in Q(i). Reducing modulo primes p = 3 (mod 4)
maps Q(i) (with odd denominators only) into GF(p^2) = GF(p)[i], where the
evaluation is exact and cheap. A residual that vanishes modulo several
independent primes is zero with overwhelming probability.
"""

import numpy as np

# 31-bit primes with p % 4 == 3, so products fit in int64 and -1 is a non-residue
PRIMES = np.array([2147483647, 2147483587, 2147483579, 2147483563, 2147483543, 2147483423],
                  dtype=np.int64)


def _float_mod(x: float) -> np.ndarray:
    num, den = float(x).as_integer_ratio()
    return np.array([num * pow(den, -1, int(p)) % int(p) for p in PRIMES], dtype=np.int64)


def to_mod(Z) -> tuple:
    """Complex array (M, n) -> (re, im) residues, each (len(PRIMES), M, n)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    re = np.empty((len(PRIMES),) + Z.shape, dtype=np.int64)
    im = np.empty_like(re)
    for idx in np.ndindex(Z.shape):
        re[(slice(None),) + idx] = _float_mod(Z[idx].real)
        im[(slice(None),) + idx] = _float_mod(Z[idx].imag)
    return re, im


def _mul(ar, ai, br, bi, P):
    return (ar * br - ai * bi) % P, (ar * bi + ai * br) % P


def eval_mod(pm, re, im):
    """Evaluate PolyMap ``pm`` on residues (re, im); returns residues of the image."""
    P = PRIMES[:, None]
    k, M, n = re.shape
    maxdeg = max((max((max(e) for e, _ in c), default=0) for c in pm.components), default=0)
    pr = np.empty((k, M, n, maxdeg + 1), dtype=np.int64)
    pi = np.empty_like(pr)
    pr[..., 0] = 1
    pi[..., 0] = 0
    for e in range(1, maxdeg + 1):
        a, b = _mul(pr[..., e - 1], pi[..., e - 1], re, im, PRIMES[:, None, None])
        pr[..., e] = a
        pi[..., e] = b
    out_r = np.zeros((k, M, pm.dim_out), dtype=np.int64)
    out_i = np.zeros_like(out_r)
    for j, comp in enumerate(pm.components):
        acc_r = np.zeros((k, M), dtype=np.int64)
        acc_i = np.zeros((k, M), dtype=np.int64)
        for exp, c in comp:
            tr = np.broadcast_to(_float_mod(c.real)[:, None], (k, M)).copy()
            ti = np.broadcast_to(_float_mod(c.imag)[:, None], (k, M)).copy()
            for v, e in enumerate(exp):
                if e:
                    tr, ti = _mul(tr, ti, pr[:, :, v, e], pi[:, :, v, e], P)
            acc_r = (acc_r + tr) % P
            acc_i = (acc_i + ti) % P
        out_r[:, :, j] = acc_r
        out_i[:, :, j] = acc_i
    return out_r, out_i


def chain_mod(factors, re, im):
    for f in factors:
        re, im = eval_mod(f, re, im)
    return re, im


def roundtrip_exactly_zero(first, second, Z) -> np.ndarray:
    """Per-point flag: second-chain(first-chain(z)) == z exactly (modular test)."""
    re, im = to_mod(Z)
    r2, i2 = chain_mod(second, *chain_mod(first, re, im))
    same = (r2 == re) & (i2 == im)
    return same.all(axis=(0, 2))
