"""Cartan linearization by averaging over an isotropy group, and the eigen-direction test.

For a compact group G of automorphisms fixing z,

    phi(zeta) = mean over f in G of f'(z)^-1 (f(zeta) - z)

satisfies phi(z) = 0, phi'(z) = I and phi o g = g'(z) phi for g in G. The
average is exact for finite groups and Monte-Carlo otherwise.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from ._config import TOLERANCES
from .ball import BallAutomorphism, check_interior, mobius_eval_batch, mobius_jacobian_batch
from .errors import HypothesisViolation, PreconditionError
from .gallery import AnnuliProduct


class LinearMap:
    """z -> M z as a map evaluator."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=np.complex128)
        self.dim = self.M.shape[0]

    def eval_batch(self, Z):
        return np.atleast_2d(np.asarray(Z, dtype=np.complex128)) @ self.M.T

    def jacobian_batch(self, Z):
        Z = np.atleast_2d(Z)
        return np.broadcast_to(self.M, (len(Z),) + self.M.shape).copy()


@dataclass
class IsotropySampler:
    """Elements of the isotropy group at ``point``.

    ``draw(rng, count)`` returns a list of map evaluators; for exact samplers
    ``elements`` holds the whole (finite) group and ``draw`` is unused.
    """

    tag: str
    point: np.ndarray
    exact: bool
    elements: list | None = None
    draw: object = None

    def sample(self, count: int | None, seed=0) -> list:
        if self.exact:
            return list(self.elements)
        count = TOLERANCES["mc_samples"] if count is None else int(count)
        if count < 1:
            raise PreconditionError("need at least one sample")
        return self.draw(np.random.default_rng(seed), count)


def ball_sampler(n: int) -> IsotropySampler:
    """Unitary group at the center of B^n (Haar via QR of Gaussian matrices)."""
    def draw(rng, count):
        Us = unitary_group.rvs(n, size=count, random_state=rng) if n > 1 else \
            np.exp(2j * np.pi * rng.random((count, 1, 1)))
        Us = np.asarray(Us).reshape(count, n, n)
        return [LinearMap(U) for U in Us]
    return IsotropySampler(f"ball{n}@0", np.zeros(n, dtype=np.complex128), False, draw=draw)


def ball_point_sampler(a) -> IsotropySampler:
    """Isotropy at a: phi_a o U o phi_a with Haar-random U."""
    a = check_interior(np.asarray(a, dtype=np.complex128).ravel())
    n = a.size
    base = ball_sampler(n)

    def draw(rng, count):
        return [BallAutomorphism((("mobius", a), ("unitary", L.M), ("mobius", a))) for L in base.draw(rng, count)]
    return IsotropySampler(f"ball{n}@a", a, False, draw=draw)


def polydisc_sampler(n: int) -> IsotropySampler:
    """Torus rotations composed with coordinate permutations at the polydisc center."""
    def draw(rng, count):
        out = []
        for _ in range(count):
            theta = 2 * np.pi * rng.random(n)
            P = np.eye(n)[rng.permutation(n)]
            out.append(LinearMap(np.exp(1j * theta)[:, None] * P))
        return out
    return IsotropySampler(f"polydisc{n}@0", np.zeros(n, dtype=np.complex128), False, draw=draw)


def annulus_sampler(r: float) -> IsotropySampler:
    """The two-element group {id, zeta -> r/zeta} fixing sqrt(r) in r < |zeta| < 1."""
    g = AnnuliProduct((r,))
    return IsotropySampler(f"annulus({r:g})@sqrt(r)", np.array([np.sqrt(r)], dtype=np.complex128), True,
                           elements=[LinearMap(np.eye(1)), g])


def _pairwise_mean(T) -> np.ndarray:
    """Mean over axis 0 by a fixed binary-tree summation."""
    T = np.asarray(T)
    n = len(T)
    while len(T) > 1:
        if len(T) % 2:
            T = np.concatenate([T[:-2], (T[-2] + T[-1])[None]])
        T = T[0::2] + T[1::2]
    return T[0] / n


def _sem(T) -> np.ndarray:
    """Standard error of the mean over axis 0 for complex samples."""
    dev = np.abs(T - T.mean(axis=0)) ** 2
    return np.sqrt(dev.sum(axis=0) / (len(T) - 1) / len(T))


class LinearizationMap:
    """phi(zeta) as a closure over the sampled group elements."""

    def __init__(self, point, elements, jinv, exact, tag, rejected=0):
        self.point = point
        self.elements = elements
        self.jinv = jinv
        self.exact = exact
        self.tag = tag
        self.rejected = rejected

    @property
    def samples(self) -> int:
        return len(self.elements)

    def _terms(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        return np.stack([(f.eval_batch(Z) - self.point) @ Ji.T for f, Ji in zip(self.elements, self.jinv)])

    def eval_batch(self, Z) -> np.ndarray:
        return _pairwise_mean(self._terms(Z))

    def eval(self, z) -> np.ndarray:
        return self.eval_batch(np.asarray(z)[None])[0]

    __call__ = eval

    def standard_error(self, Z) -> np.ndarray:
        """Per-point max component standard error of the sample mean."""
        if self.exact or self.samples < 2:
            return np.zeros(len(np.atleast_2d(Z)))
        return _sem(self._terms(Z)).max(axis=-1)

    def _dterms(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        return np.stack([Ji @ f.jacobian_batch(Z) for f, Ji in zip(self.elements, self.jinv)])

    def jacobian_batch(self, Z) -> np.ndarray:
        return _pairwise_mean(self._dterms(Z))

    def jacobian(self, z) -> np.ndarray:
        return self.jacobian_batch(np.asarray(z)[None])[0]

    def jacobian_standard_error(self, z) -> float:
        if self.exact or self.samples < 2:
            return 0.0
        return float(_sem(self._dterms(np.asarray(z)[None])[:, 0]).max())

    def report(self) -> dict:
        z = self.point
        J = self.jacobian(z)
        return {
            "tag": self.tag,
            "point": [complex(c) for c in z],
            "samples": self.samples,
            "exact": self.exact,
            "rejected": self.rejected,
            "phi_at_point": float(np.linalg.norm(self.eval(z))),
            "derivative_error": float(np.abs(J - np.eye(len(z))).max()),
            "derivative_standard_error": self.jacobian_standard_error(z),
        }


def cartan_phi(sampler: IsotropySampler, samples: int | None = None, seed=0,
               fix_tol: float = 1e-12) -> LinearizationMap:
    z = np.asarray(sampler.point, dtype=np.complex128)
    elements = sampler.sample(samples, seed)
    kept, jinv, rejected = [], [], 0
    for f in elements:
        moved = float(np.linalg.norm(f.eval_batch(z[None])[0] - z))
        if moved > fix_tol:
            raise PreconditionError(f"sampled element moves the base point by {moved:.3g}")
        J = f.jacobian_batch(z[None])[0]
        try:
            Ji = np.linalg.inv(J)
        except np.linalg.LinAlgError:
            rejected += 1
            continue
        kept.append(f)
        jinv.append(Ji)
    if not kept:
        raise PreconditionError("every sampled element had a singular derivative")
    return LinearizationMap(z, kept, np.array(jinv), sampler.exact, sampler.tag, rejected)


def equivariance_residual(phi: LinearizationMap, g, Z) -> float:
    """max |phi(g(zeta)) - g'(z) phi(zeta)| over the rows of Z."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    Jg = g.jacobian_batch(phi.point[None])[0]
    lhs = phi.eval_batch(g.eval_batch(Z))
    rhs = phi.eval_batch(Z) @ Jg.T
    return float(np.max(np.linalg.norm(lhs - rhs, axis=1)))


def eigen_direction_test(J, v, tol: float | None = None) -> bool:
    """True iff J v = v to relative tolerance: f'(a) must fix phi(b) if f fixes a and b."""
    J = np.asarray(J, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128).ravel()
    nv = float(np.linalg.norm(v))
    if not nv > TOLERANCES["phi_nonzero"]:
        raise HypothesisViolation("phi(b) vanishes; b lies in the exceptional set")
    tol = TOLERANCES["eigen_tol"] if tol is None else tol
    return bool(np.linalg.norm(J @ v - v) <= tol * nv)


def ball_cartan_map(a):
    """Closed form of the linearization at a in B^n: zeta -> D phi_a(0) phi_a(zeta)."""
    a = check_interior(np.asarray(a, dtype=np.complex128).ravel())
    A = mobius_jacobian_batch(a, np.zeros((1, a.size)))[0]

    def phi(Z):
        return mobius_eval_batch(a, Z) @ A.T
    return phi


def numeric_jacobian(F, z, h: float = 1e-6) -> np.ndarray:
    """Central-difference complex Jacobian of a holomorphic batch evaluator."""
    z = np.asarray(z, dtype=np.complex128).ravel()
    E = h * np.eye(z.size)
    return ((F(z + E) - F(z - E)) / (2 * h)).T
