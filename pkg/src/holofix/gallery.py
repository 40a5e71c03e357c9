"""One-dimensional and product examples with explicitly known fixed-point sets."""

from dataclasses import dataclass

import numpy as np

from . import io
from .errors import InteriorityError, PreconditionError
from .fixed_points import PointSet, univariate_roots
from .polycore import MultiPoly


# --- Blaschke products ----------------------------------------------------

@dataclass(frozen=True)
class BlaschkeProduct:
    """Finite Blaschke product over ``zeros[:truncation]``.

    Each factor is (|a|/a)(a - x)/(1 - conj(a) x), or x itself when a = 0.
    """

    zeros: tuple
    truncation: int | None = None

    def __post_init__(self):
        z = tuple(complex(a) for a in self.zeros)
        if any(not abs(a) < 1 for a in z):
            raise InteriorityError("Blaschke zeros must lie in the open unit disc")
        object.__setattr__(self, "zeros", z)
        t = len(z) if self.truncation is None else int(self.truncation)
        if not 0 <= t <= len(z):
            raise PreconditionError("truncation exceeds the stored zeros")
        object.__setattr__(self, "truncation", t)

    @classmethod
    def from_sequence(cls, zero_at, truncation: int) -> "BlaschkeProduct":
        """First ``truncation`` zeros of an infinite sequence k -> a_k (k = 1, 2, ...)."""
        return cls(tuple(zero_at(k) for k in range(1, truncation + 1)), truncation)

    @property
    def active_zeros(self) -> np.ndarray:
        return np.array(self.zeros[: self.truncation], dtype=np.complex128)

    def __call__(self, x):
        return blaschke_eval(self, x)

    def to_dict(self) -> dict:
        return {"zeros": io.point_to_json(self.zeros) if self.zeros else [], "truncation": self.truncation}


def blaschke_eval(B: BlaschkeProduct, x):
    """B(x) for |x| < 1 (scalar or array)."""
    x = np.asarray(x, dtype=np.complex128)
    if np.any(~(np.abs(x) < 1)):
        raise InteriorityError("Blaschke products are evaluated inside the unit disc")
    out = np.ones_like(x)
    for a in B.active_zeros:
        if a == 0:
            out = out * x
        else:
            out = out * (abs(a) / a) * (a - x) / (1 - np.conj(a) * x)
    return out[()] if out.ndim == 0 else out


# --- curve involutions ----------------------------------------------------

@dataclass(frozen=True)
class CurveInvolution:
    """(x, y) -> (x, -y) on the curve y^2 = B(x).

    ``branch`` is a one-variable MultiPoly, an ascending coefficient list, or a
    BlaschkeProduct (then x is confined to the unit disc).
    """

    branch: object

    def branch_value(self, x):
        if isinstance(self.branch, BlaschkeProduct):
            return blaschke_eval(self.branch, x)
        c = self.branch.univariate_coeffs(0) if isinstance(self.branch, MultiPoly) else self.branch
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=np.complex128), np.asarray(c))

    def eval_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        return np.column_stack([Z[:, 0], -Z[:, 1]])

    def jacobian_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(Z)
        return np.broadcast_to(np.diag([1.0 + 0j, -1.0]), (len(Z), 2, 2)).copy()

    dim = 2

    def curve_residual(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        return np.abs(Z[:, 1] ** 2 - self.branch_value(Z[:, 0]))

    def sample_curve(self, count: int, rng, radius: float = 0.9) -> np.ndarray:
        rng = np.random.default_rng(rng)
        x = radius * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
        y = np.sqrt(self.branch_value(x))
        return np.column_stack([x, y])


def involution_fixed_points(C: CurveInvolution) -> PointSet:
    """Fixed points of (x, y) -> (x, -y) on y^2 = B(x): the zeros of B paired with y = 0."""
    if isinstance(C.branch, BlaschkeProduct):
        xs = list(C.branch.active_zeros)
    else:
        xs = [r for r, _ in univariate_roots(C.branch)]
    out = PointSet()
    for x in xs:
        out.add([x, 0.0])
    return out.sorted()


# --- strip reflections ----------------------------------------------------

@dataclass(frozen=True)
class StripReflection:
    """f_k(z) = -z + (2k + 1) on C minus the closed discs of radius 1/3 about the integers."""

    k: int
    hole_radius: float = 1.0 / 3.0
    dim = 1

    def eval_batch(self, Z):
        return -np.asarray(Z, dtype=np.complex128) + (2 * self.k + 1)

    def jacobian_batch(self, Z):
        Z = np.atleast_2d(Z)
        return np.full((len(Z), 1, 1), -1.0 + 0j)

    def __call__(self, z):
        return self.eval_batch(z)

    def contains(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.complex128)
        return np.abs(Z - np.round(Z.real)) > self.hole_radius

    def image_hole(self, n: int) -> int:
        """Index m with f_k(closed disc about n) = closed disc about m."""
        return 2 * self.k + 1 - n

    @property
    def fixed_points(self) -> np.ndarray:
        return np.array([[self.k + 0.5]], dtype=np.complex128)

    def sample_domain(self, count: int, rng, box: float = 10.0) -> np.ndarray:
        rng = np.random.default_rng(rng)
        out, have = [], 0
        while have < count:
            z = box * (2 * rng.random(2 * count) - 1) + 1j * box * (2 * rng.random(2 * count) - 1)
            z = z[self.contains(z)]
            out.append(z)
            have += z.size
        return np.concatenate(out)[:count]


def strip_automorphism(k: int) -> StripReflection:
    return StripReflection(int(k))


# --- annuli products ------------------------------------------------------

@dataclass(frozen=True)
class AnnuliProduct:
    """z_j -> r_j / z_j on the product of annuli r_j < |z_j| < 1 (an involution)."""

    radii: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in self.radii)
        if not r or any(not 0 < x < 1 for x in r):
            raise PreconditionError("each annulus radius must lie in (0, 1)")
        object.__setattr__(self, "radii", r)

    @property
    def dim(self) -> int:
        return len(self.radii)

    @property
    def _r(self):
        return np.array(self.radii)

    def eval_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._r / Z

    def jacobian_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = -self._r / Z**2
        J = np.zeros((len(Z), self.dim, self.dim), dtype=np.complex128)
        idx = np.arange(self.dim)
        J[:, idx, idx] = d
        return J

    def eval(self, z):
        return self.eval_batch(np.asarray(z)[None])[0]

    __call__ = eval

    def jacobian(self, z):
        return self.jacobian_batch(np.asarray(z)[None])[0]

    def contains(self, Z) -> np.ndarray:
        A = np.abs(np.atleast_2d(np.asarray(Z, dtype=np.complex128)))
        return np.all((A > self._r) & (A < 1), axis=1)

    def fixed_points(self) -> PointSet:
        """All sign choices (+-sqrt r_1, ..., +-sqrt r_n)."""
        roots = np.sqrt(self._r)
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * self.dim, indexing="ij")).reshape(self.dim, -1).T
        return PointSet(signs * roots).sorted()

    def to_dict(self) -> dict:
        return {"radii": list(self.radii)}


def annuli_product_automorphism(radii) -> AnnuliProduct:
    return AnnuliProduct(tuple(np.atleast_1d(radii)))
