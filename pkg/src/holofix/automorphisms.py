"""Polynomial automorphisms of C^n with prescribed finite fixed-point sets.

Everything here is built from three elementary families, each with an exact
polynomial inverse:

* the shift map ``H``: ``w1 = z1 + z2 + P(z1)``, ``w2 = z2 + P(z1)``,
  ``w_s = i z_s`` with ``P(z1) = prod (z1 - a_j)``, whose fixed points are
  exactly ``(a_j, 0, ..., 0)``; it is stored as a shift followed by a shear;
* the placer ``F``: ``w1 = z1``, ``w' = z' + f(z1)`` with ``f`` the Lagrange
  interpolant sending ``a_j`` to ``b_j``;
* linear shears ``w1 = z1 + c . z'`` used to separate first coordinates.

Composites keep their factors; the expanded polynomial is only produced on
request (see :attr:`PolyAutomorphism.forward`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import _exact
from ._config import TOLERANCES
from .errors import ArityError, PreconditionError, PreconditioningError, ResourceError, SeparationError
from .polycore import MultiPoly, PolyMap

PROVENANCES = ("shift", "placer", "conjugation", "linear", "composite")


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.complex128)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2 or P.shape[0] == 0:
        raise ArityError("expected a non-empty list of points")
    return P


def _min_pairwise(values) -> float:
    values = np.asarray(values)
    if len(values) < 2:
        return np.inf
    if values.ndim == 1:
        d = np.abs(values[:, None] - values[None, :])
    else:
        d = np.linalg.norm(values[:, None, :] - values[None, :, :], axis=-1)
    d[np.diag_indices(len(values))] = np.inf
    return float(d.min())


def _diameter(P) -> float:
    if len(P) < 2:
        return 0.0
    return float(np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1).max())


@dataclass(frozen=True)
class TargetSet:
    """Pairwise-distinct points in C^n with a recorded minimum separation."""

    points: np.ndarray
    separation: float

    @classmethod
    def from_points(cls, points, min_separation: float = 0.0) -> "TargetSet":
        P = _as_points(points)
        sep = _min_pairwise(P)
        if sep <= min_separation or sep == 0.0:
            raise SeparationError(f"points are not pairwise distinct (min distance {sep:.3g})")
        return cls(P, sep)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class PolyAutomorphism:
    """A polynomial automorphism held as a chain of factors.

    ``factors`` and ``inverse_factors`` are in application order: the forward
    map is ``factors[-1] o ... o factors[0]``. ``factor_tags`` names the role of
    each forward factor so structural solvers can find the shift core.
    """

    factors: tuple
    inverse_factors: tuple
    provenance: str
    factor_tags: tuple = ()
    info: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.factors or not self.inverse_factors:
            raise ArityError("an automorphism needs at least one factor each way")
        n = self.factors[0].dim_in
        for f in tuple(self.factors) + tuple(self.inverse_factors):
            if f.dim_in != n or f.dim_out != n:
                raise ArityError("all factors must be square maps of one dimension")
        if self.factor_tags and len(self.factor_tags) != len(self.factors):
            raise ArityError("one tag per forward factor")

    @property
    def dim(self) -> int:
        return self.factors[0].dim_in

    @cached_property
    def forward(self) -> PolyMap:
        """Expanded forward map (may raise ResourceError for large composites)."""
        return _expand(self.factors)

    @cached_property
    def inverse(self) -> PolyMap:
        return _expand(self.inverse_factors)

    def eval_batch(self, Z) -> np.ndarray:
        for f in self.factors:
            Z = f.eval_batch(Z)
        return Z

    def inverse_eval_batch(self, Z) -> np.ndarray:
        for f in self.inverse_factors:
            Z = f.eval_batch(Z)
        return Z

    def jacobian_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        J = None
        for f in self.factors:
            Jf = f.jacobian_batch(Z)
            J = Jf if J is None else Jf @ J
            Z = f.eval_batch(Z)
        return J

    def eval(self, z) -> np.ndarray:
        return self.eval_batch(np.asarray(z, dtype=np.complex128)[None, :])[0]

    __call__ = eval

    def inverse_eval(self, z) -> np.ndarray:
        return self.inverse_eval_batch(np.asarray(z, dtype=np.complex128)[None, :])[0]

    def jacobian(self, z) -> np.ndarray:
        return self.jacobian_batch(np.asarray(z, dtype=np.complex128)[None, :])[0]

    def inverted(self) -> "PolyAutomorphism":
        return PolyAutomorphism(self.inverse_factors, self.factors, "composite")

    def then(self, outer: "PolyAutomorphism") -> "PolyAutomorphism":
        """outer o self."""
        return PolyAutomorphism(tuple(self.factors) + tuple(outer.factors),
                                tuple(outer.inverse_factors) + tuple(self.inverse_factors),
                                "composite")

    @property
    def n_terms(self) -> int:
        return sum(f.n_terms for f in self.factors)

    def to_dict(self) -> dict:
        d = {
            "provenance": self.provenance,
            "factors": [f.to_dict() for f in self.factors],
            "inverse_factors": [f.to_dict() for f in self.inverse_factors],
        }
        if self.factor_tags:
            d["factor_tags"] = list(self.factor_tags)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PolyAutomorphism":
        return cls(tuple(PolyMap.from_dict(f) for f in d["factors"]),
                   tuple(PolyMap.from_dict(f) for f in d["inverse_factors"]),
                   d["provenance"], tuple(d.get("factor_tags", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "PolyAutomorphism":
        return cls.from_dict(json.loads(s))


def _expand(factors: Sequence[PolyMap]) -> PolyMap:
    out = factors[0]
    for f in factors[1:]:
        out = f.compose(out)
    return out


def identity_automorphism(n: int) -> PolyAutomorphism:
    I = PolyMap.identity(n)
    return PolyAutomorphism((I,), (I,), "linear", ("linear",))


def shift_polynomial(roots, n: int) -> MultiPoly:
    """P(z1) = prod (z1 - a_j) as a polynomial in n variables."""
    return MultiPoly.from_roots(roots, nvars=n, var=0)


def build_shift_automorphism(roots: Sequence[complex], dim: int) -> PolyAutomorphism:
    """The shift map H with Fix(H) = {(a_j, 0, ..., 0)}."""
    if dim < 2:
        raise ArityError("the shift automorphism needs dim >= 2")
    roots = np.atleast_1d(np.asarray(roots, dtype=np.complex128))
    if roots.size == 0:
        raise ArityError("need at least one root")
    sep = _min_pairwise(roots)
    if sep < TOLERANCES["root_separation"]:
        raise SeparationError(f"roots closer than {TOLERANCES['root_separation']:g} (min {sep:.3g})")
    n = dim
    z = [MultiPoly.variable(n, i) for i in range(n)]
    P = shift_polynomial(roots, n)
    # both directions stay factored: merging z1 + P(z1) rounds the z1 coefficient,
    # and expanding P(w1 - w2) destroys accuracy
    shift = [z[0], z[1] + P] + [z[s] * 1j for s in range(2, n)]
    shear = [z[0] + z[1]] + z[1:]
    unshear = [z[0] - z[1], z[1]] + [z[s] * -1j for s in range(2, n)]
    unshift = [z[0], z[1] - P] + z[2:]
    return PolyAutomorphism((PolyMap(shift), PolyMap(shear)), (PolyMap(unshear), PolyMap(unshift)),
                            "shift", ("shift", "shear"), {"roots": [complex(r) for r in roots]})


def lagrange_interpolant(nodes, values, n: int) -> list:
    """Polynomials f_s(z1), s = 1..m, with f_s(nodes[j]) = values[j, s].

    Returned as MultiPoly in ``n`` variables depending on z1 only.
    """
    nodes = np.asarray(nodes, dtype=np.complex128)
    values = np.atleast_2d(np.asarray(values, dtype=np.complex128))
    k, m = values.shape
    x = MultiPoly.variable(n, 0)
    basis = []
    for j in range(k):
        lj = MultiPoly.constant(n, 1.0)
        for i in range(k):
            if i != j:
                lj = lj * ((x - nodes[i]) * (1.0 / (nodes[j] - nodes[i])))
        basis.append(lj)
    out = []
    for s in range(m):
        f = MultiPoly(n)
        for j in range(k):
            if values[j, s] != 0:
                f = f + basis[j] * values[j, s]
        out.append(f)
    return out


def build_point_placer(targets) -> PolyAutomorphism:
    """Triangular map sending (a_j, 0, ..., 0) to p_j = (a_j, b_j)."""
    if not isinstance(targets, TargetSet):
        targets = TargetSet.from_points(targets)
    P = targets.points
    k, n = P.shape
    if n < 2:
        raise ArityError("the placer needs dim >= 2")
    a = P[:, 0]
    if _min_pairwise(a) < TOLERANCES["root_separation"]:
        raise PreconditionError("first coordinates coincide; run generic_linear_precondition first")
    f = lagrange_interpolant(a, P[:, 1:], n)
    z = [MultiPoly.variable(n, i) for i in range(n)]
    fwd = [z[0]] + [z[s] + f[s - 1] for s in range(1, n)]
    inv = [z[0]] + [z[s] - f[s - 1] for s in range(1, n)]
    return PolyAutomorphism((PolyMap(fwd),), (PolyMap(inv),), "placer", ("placer",))


def _first_coord_separation(P, diam):
    return _min_pairwise(P[:, 0]) >= TOLERANCES["precondition_separation"] * diam


def generic_linear_precondition(points, seed=0):
    """Linear shear L making the first coordinates of L(p_j) pairwise distinct.

    Returns ``(L, TargetSet of images)``. L is the identity when the input is
    already separated; otherwise ``w1 = z1 + c . z'`` with seeded random ``c``,
    retried up to ``precondition_retries`` times.
    """
    P = _as_points(points)
    k, n = P.shape
    if _min_pairwise(P) == 0.0:
        raise SeparationError("points are not pairwise distinct")
    diam = _diameter(P)
    if _first_coord_separation(P, diam):
        return identity_automorphism(n), TargetSet.from_points(P)
    if n < 2:
        raise PreconditioningError("cannot separate first coordinates in dimension 1")
    rng = np.random.default_rng(seed)
    for attempt in range(1, TOLERANCES["precondition_retries"] + 1):
        c = rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
        A = np.eye(n, dtype=np.complex128)
        A[0, 1:] = c
        Q = P @ A.T
        if _first_coord_separation(Q, diam):
            Ainv = np.eye(n, dtype=np.complex128)
            Ainv[0, 1:] = -c
            L = PolyAutomorphism((PolyMap.linear(A),), (PolyMap.linear(Ainv),), "linear", ("linear",),
                                 {"attempts": attempt})
            return L, TargetSet.from_points(Q)
    raise PreconditioningError(f"no separating shear after {TOLERANCES['precondition_retries']} attempts")


def prescribe_fixed_points(points, n: int | None = None, seed=0) -> PolyAutomorphism:
    """Automorphism g = L^-1 o F o H o F^-1 o L with Fix(g) = points."""
    P = _as_points(points)
    if n is not None and P.shape[1] != n:
        raise ArityError(f"points live in C^{P.shape[1]}, requested n={n}")
    n = P.shape[1]
    if n < 2:
        raise ArityError("need n >= 2")
    L, targets = generic_linear_precondition(P, seed)
    H = build_shift_automorphism(targets.points[:, 0], n)
    F = build_point_placer(targets)
    Hf, Hi = list(H.factors), list(H.inverse_factors)
    (Ff,), (Fi,) = F.factors, F.inverse_factors
    fwd, inv = [Fi] + Hf + [Ff], [Fi] + Hi + [Ff]
    tags = ["placer_inverse"] + list(H.factor_tags) + ["placer"]
    attempts = L.info.get("attempts", 0)
    if attempts:
        (Lf,), (Li,) = L.factors, L.inverse_factors
        fwd, inv = [Lf] + fwd + [Li], [Lf] + inv + [Li]
        tags = ["linear"] + tags + ["linear_inverse"]
    return PolyAutomorphism(tuple(fwd), tuple(inv), "conjugation", tuple(tags),
                            {"precondition_attempts": attempts})


@dataclass
class VerificationReport:
    passed: bool
    max_residual: float
    inverse_residual: float
    float_residual: float
    exact_points: int
    samples: int
    box: float
    symbolic_identity: bool | None
    threshold: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def box_samples(n: int, count: int, box: float, seed=0) -> np.ndarray:
    """Seeded points with real and imaginary parts uniform in [-box, box]."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-box, box, size=(count, 2 * n))
    return X[:, 0::2] + 1j * X[:, 1::2]


def _roundtrip(first, second, Z):
    W = Z
    for f in tuple(first) + tuple(second):
        W = f.eval_batch(W)
    with np.errstate(invalid="ignore", over="ignore"):
        r = np.abs(W - Z).max(axis=1)
    return np.nan_to_num(r, nan=np.inf)


def verify_automorphism(g: PolyAutomorphism, samples: int = 100, box: float = 10.0, seed=0,
                        symbolic_term_limit: int = 20_000) -> VerificationReport:
    """Round-trip check of a factored automorphism.

    For each seeded sample z in the centered box, ``g^-1(g(z)) - z`` (and the
    other order) is first tested for exact vanishing by modular evaluation;
    points where it vanishes exactly get residual 0, the rest get their
    float64 residual. ``float_residual`` is the plain float64 round trip,
    kept as a conditioning diagnostic. The symbolic identity check runs when
    the expanded compositions are small enough, otherwise it is ``None``.
    """
    Z = box_samples(g.dim, samples, box, seed)
    f1 = _roundtrip(g.factors, g.inverse_factors, Z)
    f2 = _roundtrip(g.inverse_factors, g.factors, Z)
    e1 = _exact.roundtrip_exactly_zero(g.factors, g.inverse_factors, Z)
    e2 = _exact.roundtrip_exactly_zero(g.inverse_factors, g.factors, Z)
    res = float(np.where(e1, 0.0, f1).max())
    ires = float(np.where(e2, 0.0, f2).max())
    sym = None
    if _expanded_size_bound(g) <= symbolic_term_limit:
        try:
            I = PolyMap.identity(g.dim)
            sym = (_expand(tuple(g.factors) + tuple(g.inverse_factors)).almost_equal(I, 1e-12)
                   and _expand(tuple(g.inverse_factors) + tuple(g.factors)).almost_equal(I, 1e-12))
        except ResourceError:
            sym = None
    thr = TOLERANCES["automorphism_residual"]
    return VerificationReport(bool(max(res, ires) < thr), res, ires, float(max(f1.max(), f2.max())),
                              int(np.sum(e1 & e2)), samples, box, sym, thr)


def _expanded_size_bound(g: PolyAutomorphism) -> int:
    from math import comb
    d1 = int(np.prod([max(f.degree, 1) for f in g.factors]))
    d2 = int(np.prod([max(f.degree, 1) for f in g.inverse_factors]))
    return comb(d1 * d2 + g.dim, g.dim)
