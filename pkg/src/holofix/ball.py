"""Kobayashi geometry of the unit ball B^n.

Conventions: <z, w> = sum z_i conj(w_i). The involution exchanging 0 and a is

    phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>),   s_a = sqrt(1 - |a|^2),

with P_a the orthogonal projection onto C a and Q_a = I - P_a. At a = 0 we take
phi_0 = -id, the limit along any ray, so phi_a o phi_a = id holds for every a.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from . import io
from ._config import TOLERANCES
from .errors import (ArityError, CapabilityError, EmptyFeasibleSetError, InteriorityError,
                     PreconditionError)
from .kernels import ball_objective_batch, sphere_descent


def inner(z, w):
    """<z, w> along the last axis."""
    return np.sum(np.asarray(z) * np.conj(w), axis=-1)


def check_interior(z, margin: float | None = None) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    margin = TOLERANCES["interior_margin"] if margin is None else margin
    nrm = np.linalg.norm(z, axis=-1)
    if np.any(~(nrm < 1.0 - margin)):
        raise InteriorityError(f"point norm {float(np.max(nrm)):.15g} is not below 1 - {margin:g}")
    return z


@dataclass(frozen=True)
class BallPoint:
    coords: np.ndarray

    def __post_init__(self):
        z = check_interior(np.asarray(self.coords, dtype=np.complex128).ravel())
        object.__setattr__(self, "coords", z)

    @property
    def dim(self) -> int:
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)


def _vec(z) -> np.ndarray:
    if isinstance(z, BallPoint):
        return z.coords
    return np.asarray(z, dtype=np.complex128).ravel()


def sample_ball(n: int, count: int, rng, radius: float = 1.0) -> np.ndarray:
    """Uniform samples from the ball of the given radius in C^n."""
    rng = np.random.default_rng(rng)
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = radius * rng.random(count) ** (1.0 / (2 * n))
    return g * r[:, None]


# --- involutions ----------------------------------------------------------

def _mobius_parts(a):
    aa = float(np.real(inner(a, a)))
    s = math.sqrt(1.0 - aa)
    return aa, s


def mobius_eval_batch(a, Z) -> np.ndarray:
    a = _vec(a)
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    aa, s = _mobius_parts(a)
    if aa == 0.0:
        return -Z
    za = Z @ np.conj(a)
    Pz = (za / aa)[:, None] * a
    return (a - Pz - s * (Z - Pz)) / (1.0 - za)[:, None]


def mobius_jacobian_batch(a, Z) -> np.ndarray:
    a = _vec(a)
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    n = a.size
    aa, s = _mobius_parts(a)
    if aa == 0.0:
        return np.broadcast_to(-np.eye(n, dtype=np.complex128), (len(Z), n, n)).copy()
    A = (1 - s) * np.outer(a, np.conj(a)) / aa + s * np.eye(n)
    D = 1.0 - Z @ np.conj(a)
    N = a - Z @ A.T
    return -A[None] / D[:, None, None] + N[:, :, None] * np.conj(a)[None, None, :] / (D**2)[:, None, None]


def check_unitary(U, tol: float = 1e-12) -> np.ndarray:
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ArityError("unitary part must be a square matrix")
    err = float(np.max(np.abs(U @ U.conj().T - np.eye(len(U)))))
    if err > tol:
        raise PreconditionError(f"matrix is not unitary (|UU* - I| = {err:.3g})")
    return U


@dataclass(frozen=True)
class BallAutomorphism:
    """An automorphism of B^n as a word of Mobius and unitary factors.

    ``word`` lists ("mobius", a) and ("unitary", U) in application order.
    """

    word: tuple

    def __post_init__(self):
        if not self.word:
            raise ArityError("empty word")
        dims = set()
        for kind, val in self.word:
            if kind == "mobius":
                dims.add(check_interior(_vec(val)).size)
            elif kind == "unitary":
                dims.add(len(check_unitary(val)))
            else:
                raise ValueError(f"unknown factor kind {kind!r}")
        if len(dims) != 1:
            raise ArityError("factors disagree on dimension")

    @property
    def dim(self) -> int:
        kind, val = self.word[0]
        return _vec(val).size if kind == "mobius" else len(val)

    def eval_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        for kind, val in self.word:
            Z = mobius_eval_batch(val, Z) if kind == "mobius" else Z @ np.asarray(val).T
        return Z

    def jacobian_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        J = np.broadcast_to(np.eye(self.dim, dtype=np.complex128), (len(Z), self.dim, self.dim))
        for kind, val in self.word:
            if kind == "mobius":
                J = mobius_jacobian_batch(val, Z) @ J
                Z = mobius_eval_batch(val, Z)
            else:
                J = np.asarray(val) @ J
                Z = Z @ np.asarray(val).T
        return J

    def eval(self, z) -> np.ndarray:
        return self.eval_batch(_vec(z)[None])[0]

    __call__ = eval

    def jacobian(self, z) -> np.ndarray:
        return self.jacobian_batch(_vec(z)[None])[0]

    def inverse(self) -> "BallAutomorphism":
        inv = [(k, v if k == "mobius" else np.asarray(v).conj().T) for k, v in reversed(self.word)]
        return BallAutomorphism(tuple(inv))

    def then(self, outer: "BallAutomorphism") -> "BallAutomorphism":
        """outer o self."""
        return BallAutomorphism(tuple(self.word) + tuple(outer.word))

    @property
    def center_param(self) -> np.ndarray:
        """The point a = f^-1(0); f = V o phi_a with V unitary."""
        return self.inverse().eval(np.zeros(self.dim, dtype=np.complex128))

    @property
    def unitary_part(self) -> np.ndarray:
        a = self.center_param
        E = 0.5 * np.eye(self.dim, dtype=np.complex128)
        return (self.eval_batch(mobius_eval_batch(a, E)) / 0.5).T

    def to_dict(self) -> dict:
        word = []
        for kind, val in self.word:
            if kind == "mobius":
                word.append({"kind": kind, "a": io.point_to_json(_vec(val))})
            else:
                word.append({"kind": kind, "U": [io.point_to_json(row) for row in np.asarray(val)]})
        return {"word": word}

    @classmethod
    def from_dict(cls, d) -> "BallAutomorphism":
        word = []
        for f in d["word"]:
            if f["kind"] == "mobius":
                word.append(("mobius", io.point_from_json(f["a"])))
            else:
                word.append(("unitary", np.array([io.point_from_json(r) for r in f["U"]])))
        return cls(tuple(word))


def mobius_involution(a) -> BallAutomorphism:
    """phi_a: swaps 0 and a, squares to the identity; phi_0 = -id."""
    a = check_interior(_vec(a))
    return BallAutomorphism((("mobius", a),))


def unitary_map(U) -> BallAutomorphism:
    return BallAutomorphism((("unitary", np.asarray(U, dtype=np.complex128)),))


def random_ball_automorphism(n: int, rng, max_norm: float = 0.9) -> BallAutomorphism:
    """U o phi_a with Haar-random U and a uniform in the ball of radius ``max_norm``."""
    rng = np.random.default_rng(rng)
    a = sample_ball(n, 1, rng, max_norm)[0]
    U = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.random((1, 1)))
    return BallAutomorphism((("mobius", a), ("unitary", U)))


# --- distance and balls ---------------------------------------------------

def kobayashi_distance(z, w) -> float:
    """k(z, w) = arctanh |phi_z(w)|."""
    z = check_interior(_vec(z))
    w = check_interior(_vec(w))
    return float(np.arctanh(np.linalg.norm(mobius_eval_batch(z, w[None])[0])))


def kobayashi_distance_batch(z, W) -> np.ndarray:
    z = check_interior(_vec(z))
    W = check_interior(np.atleast_2d(np.asarray(W, dtype=np.complex128)))
    return np.arctanh(np.linalg.norm(mobius_eval_batch(z, W), axis=1))


@dataclass(frozen=True)
class KobayashiBallDesc:
    """The Kobayashi ball b(center, sigma) = {z : |phi_center(z)| < tanh sigma}."""

    center: np.ndarray
    sigma: float

    @property
    def radius_tanh(self) -> float:
        return math.tanh(self.sigma)

    @property
    def euclidean_radius(self) -> float | None:
        """Euclidean radius when the ball is centered at the origin."""
        return self.radius_tanh if not np.any(self.center) else None

    @property
    def is_singleton(self) -> bool:
        return self.sigma == 0

    def contains(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        if self.is_singleton:
            return np.all(Z == self.center, axis=1)
        inside = np.linalg.norm(Z, axis=1) < 1.0
        out = np.zeros(len(Z), bool)
        out[inside] = np.linalg.norm(mobius_eval_batch(self.center, Z[inside]), axis=1) < self.radius_tanh
        return out

    def on_boundary(self, Z, tol: float = 1e-12) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        return np.abs(np.linalg.norm(mobius_eval_batch(self.center, Z), axis=1) - self.radius_tanh) < tol

    def to_dict(self) -> dict:
        return {"center": io.point_to_json(self.center), "sigma": self.sigma,
                "tanh_sigma": self.radius_tanh, "euclidean_radius": self.euclidean_radius}


def kobayashi_ball(center, sigma: float) -> KobayashiBallDesc:
    if sigma < 0:
        raise PreconditionError("sigma must be non-negative")
    return KobayashiBallDesc(check_interior(_vec(center)), float(sigma))


# --- nearest point on a sphere --------------------------------------------

@dataclass(frozen=True)
class HalfSpace:
    """sign * (Im or Re of z_coord - bound) >= 0."""

    coord: int
    sign: int
    bound: float
    part: str = "im"

    @classmethod
    def im_at_least(cls, coord: int, bound: float) -> "HalfSpace":
        return cls(coord, 1, float(bound))

    @classmethod
    def im_at_most(cls, coord: int, bound: float) -> "HalfSpace":
        return cls(coord, -1, float(bound))

    @property
    def real_index(self) -> int:
        return 2 * self.coord + (1 if self.part == "im" else 0)

    def value(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        v = Z[:, self.coord]
        return self.sign * ((v.imag if self.part == "im" else v.real) - self.bound)

    def contains(self, Z, tol: float = 0.0) -> np.ndarray:
        return self.value(Z) >= -tol

    def to_dict(self) -> dict:
        return {"coord": self.coord, "sign": self.sign, "bound": self.bound, "part": self.part}


def _to_real(Z) -> np.ndarray:
    Z = np.atleast_2d(Z)
    X = np.empty((Z.shape[0], 2 * Z.shape[1]))
    X[:, 0::2] = Z.real
    X[:, 1::2] = Z.imag
    return X


def _to_complex(X) -> np.ndarray:
    return X[..., 0::2] + 1j * X[..., 1::2]


@dataclass
class NearestResult:
    point: np.ndarray
    distance: float
    uniqueness_gap: float
    cap_boundary: bool
    starts: int
    clusters: list = field(default_factory=list)
    sphere_residual: float = 0.0
    tangent_gradient: float = 0.0
    constraint: HalfSpace | None = None

    @property
    def unique(self) -> bool:
        return self.uniqueness_gap > TOLERANCES["uniqueness_gap"]

    def to_dict(self) -> dict:
        return {
            "point": io.point_to_json(self.point),
            "distance": self.distance,
            "uniqueness_gap": None if math.isinf(self.uniqueness_gap) else self.uniqueness_gap,
            "single_cluster": math.isinf(self.uniqueness_gap),
            "cap_boundary": self.cap_boundary,
            "starts": self.starts,
            "clusters": self.clusters,
            "sphere_residual": self.sphere_residual,
            "tangent_gradient": self.tangent_gradient,
            "constraint": None if self.constraint is None else self.constraint.to_dict(),
        }


def _sphere_starts(p, c0, R, constraint, count, rng):
    n = c0.size
    cand = []
    nc = np.linalg.norm(c0)
    if nc > 0:
        cand.append(c0 - R * c0 / nc)
    dp = p - c0
    if np.linalg.norm(dp) > 0:
        cand.append(c0 + R * dp / np.linalg.norm(dp))
    g = rng.standard_normal((64 * count, n)) + 1j * rng.standard_normal((64 * count, n))
    g = c0 + R * g / np.linalg.norm(g, axis=1)[:, None]
    Z = np.vstack([np.array(cand).reshape(-1, n), g])
    ok = np.linalg.norm(Z, axis=1) < 1.0 - TOLERANCES["interior_margin"]
    if constraint is not None:
        ok &= constraint.contains(Z)
    Z = Z[ok]
    if len(Z) == 0:
        raise EmptyFeasibleSetError("no feasible point on sphere within the ball and half-space")
    return Z[:count]


def nearest_on_sphere(p, center, radius: float, constraint: HalfSpace | None = None,
                      starts: int | None = None, seed=0) -> NearestResult:
    """Point of the sphere |z - center| = radius (inside B^n, optionally inside a
    half-space) closest to ``p`` in the Kobayashi distance.

    Multi-start projected descent with finite-difference gradients; endpoints
    are clustered and ``uniqueness_gap`` is the distance excess of the second
    best cluster (inf when all starts agree).
    """
    p = check_interior(_vec(p))
    c0 = np.asarray(center, dtype=np.complex128).ravel()
    if c0.size != p.size:
        raise ArityError("sphere center and p differ in dimension")
    R = float(radius)
    if R <= 0:
        raise PreconditionError("radius must be positive")
    if abs(np.linalg.norm(p - c0) - R) < 1e-14:
        raise PreconditionError("p lies on the sphere")
    count = TOLERANCES["sphere_starts"] if starts is None else int(starts)
    rng = np.random.default_rng(seed)
    Z0 = _sphere_starts(p, c0, R, constraint, count, rng)
    idx, sign, bound = (constraint.real_index, constraint.sign, constraint.bound) if constraint else (0, 0, 0.0)
    X, f, _, status = sphere_descent(p, _to_real(c0[None])[0], R, idx, sign, float(bound), _to_real(Z0),
                                     TOLERANCES["fd_step"], TOLERANCES["sphere_position_tol"],
                                     TOLERANCES["sphere_max_iter"])
    good = np.isfinite(f) & (status != 2)
    if not np.any(good):
        raise EmptyFeasibleSetError("descent left the ball from every start")
    Zf = _to_complex(X[good])
    dist = np.arctanh(np.linalg.norm(mobius_eval_batch(p, Zf), axis=1))
    order = np.lexsort((Zf.imag.sum(axis=1), Zf.real.sum(axis=1), dist))
    reps, members = [], []
    rad = TOLERANCES["cluster_radius"]
    for i in order:
        for j, r in enumerate(reps):
            if np.linalg.norm(Zf[i] - Zf[r]) < rad:
                members[j] += 1
                break
        else:
            reps.append(i)
            members.append(1)
    best = reps[0]
    gap = float(dist[reps[1]] - dist[best]) if len(reps) > 1 else math.inf
    c = Zf[best]
    cap = False
    if constraint is not None:
        cap = bool(abs(constraint.value(c)[0]) < TOLERANCES["cap_boundary_tol"])
    Xb = X[good][best]
    h = TOLERANCES["fd_step"]
    E = np.eye(Xb.size) * h
    G = (ball_objective_batch(p, Xb + E) - ball_objective_batch(p, Xb - E)) / (2 * h)
    N = (Xb - _to_real(c0[None])[0]) / R
    Gt = G - (G @ N) * N
    clusters = [{"distance": float(dist[r]), "count": m, "point": io.point_to_json(Zf[r])}
                for r, m in zip(reps, members)]
    return NearestResult(c, float(dist[best]), gap, cap, len(Z0), clusters,
                         float(abs(np.linalg.norm(c - c0) - R)), float(np.linalg.norm(Gt)), constraint)


# --- automorphisms fixing a pair ------------------------------------------

def automorphism_fixing_pair(a, b, theta: float) -> BallAutomorphism:
    """f = phi_a o U o phi_a with U fixing v = phi_a(b) and turning v-perp by theta.

    f fixes a, b and hence the whole slice of the complex line through them.
    """
    a = check_interior(_vec(a))
    b = check_interior(_vec(b))
    n = a.size
    if b.size != n:
        raise ArityError("a and b differ in dimension")
    if n < 2:
        raise CapabilityError("need n >= 2 for a nontrivial rotation")
    if np.linalg.norm(a - b) < TOLERANCES["root_separation"]:
        raise PreconditionError("a and b coincide")
    v = mobius_eval_batch(a, b[None])[0]
    Pv = np.outer(v, np.conj(v)) / np.real(inner(v, v))
    U = Pv + np.exp(1j * theta) * (np.eye(n) - Pv)
    return BallAutomorphism((("mobius", a), ("unitary", U), ("mobius", a)))


def line_disc(a, u, center=None, radius: float = 1.0):
    """Parameters t with |a + t u - center| < radius form the disc |t - t0| < rho.

    Returns (t0, rho^2); rho^2 <= 0 means the line misses the ball.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    u = np.asarray(u, dtype=np.complex128).ravel()
    w = a if center is None else a - np.asarray(center, dtype=np.complex128).ravel()
    uu = float(np.real(inner(u, u)))
    wu = complex(inner(w, u))
    t0 = -wu / uu
    rho2 = (radius**2 - float(np.real(inner(w, w))) + abs(wu) ** 2 / uu) / uu
    return t0, rho2


@dataclass
class LineCheck:
    precondition_met: bool
    precondition_residual: float
    max_residual: float
    samples: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def sample_line_in_ball(a, b, count: int, rng, shrink: float = 0.999) -> np.ndarray:
    a, b = _vec(a), _vec(b)
    u = b - a
    t0, rho2 = line_disc(a, u)
    rng = np.random.default_rng(rng)
    rho = shrink * math.sqrt(max(rho2, 0.0))
    t = t0 + rho * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
    return a + t[:, None] * u


def line_fixed_check(f, a, b, samples: int = 50, seed=0, tol: float | None = None) -> LineCheck:
    """max |f(z) - z| over samples of L cap B, L the complex line through a, b."""
    F = f.eval_batch if hasattr(f, "eval_batch") else f
    a, b = check_interior(_vec(a)), check_interior(_vec(b))
    tol = TOLERANCES["map_fixes_tol"] if tol is None else tol
    ab = np.vstack([a, b])
    pre = float(np.max(np.linalg.norm(np.asarray(F(ab)) - ab, axis=1)))
    Z = sample_line_in_ball(a, b, samples, seed)
    res = float(np.max(np.linalg.norm(np.asarray(F(Z)) - Z, axis=1)))
    return LineCheck(pre < tol, pre, res, samples)
