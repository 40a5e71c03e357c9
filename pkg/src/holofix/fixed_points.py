"""Fixed-point sets of polynomial self-maps, retractions and determining sets."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import io
from ._config import TOLERANCES
from .errors import (ArityError, CapabilityError, DegreeError, HypothesisViolation,
                     PreconditionError)
from .kernels import aberth
from .polycore import MultiPoly


class PointSet:
    """Points in C^n kept pairwise at least ``dedup_tol`` apart.

    Adding a point within ``dedup_tol`` of a stored one merges it (the stored
    point wins) instead of appending.
    """

    def __init__(self, points=(), dedup_tol: float | None = None):
        self.dedup_tol = TOLERANCES["dedup_tol"] if dedup_tol is None else float(dedup_tol)
        self._points: list[np.ndarray] = []
        for p in points:
            self.add(p)

    def _nearest(self, z):
        if not self._points:
            return None, np.inf
        d = np.linalg.norm(np.asarray(self._points) - z, axis=1)
        i = int(np.argmin(d))
        return i, float(d[i])

    def add(self, z) -> bool:
        """Insert ``z``; returns False when it merged into an existing point."""
        z = np.asarray(z, dtype=np.complex128).ravel()
        if self._points and z.shape != self._points[0].shape:
            raise ArityError("all points of a PointSet share one dimension")
        _, d = self._nearest(z)
        if d < self.dedup_tol:
            return False
        self._points.append(z.copy())
        return True

    def contains(self, z, tol: float | None = None) -> bool:
        _, d = self._nearest(np.asarray(z, dtype=np.complex128).ravel())
        return d < (self.dedup_tol if tol is None else tol)

    def order(self) -> list:
        """Indices putting the points in lexicographic (re, im) order."""
        keys = [tuple(v for c in p for v in (round(c.real, 12), round(c.imag, 12))) for p in self._points]
        return sorted(range(len(keys)), key=keys.__getitem__)

    def sorted(self) -> "PointSet":
        out = PointSet(dedup_tol=self.dedup_tol)
        out._points = [self._points[i] for i in self.order()]
        return out

    @property
    def points(self) -> np.ndarray:
        if not self._points:
            return np.zeros((0, 0), dtype=np.complex128)
        return np.array(self._points)

    def __len__(self):
        return len(self._points)

    def __iter__(self):
        return iter(self._points)

    def __getitem__(self, i):
        return self._points[i]

    def hausdorff(self, other) -> float:
        A = self.points
        B = other.points if isinstance(other, PointSet) else np.atleast_2d(np.asarray(other, dtype=np.complex128))
        if len(A) == 0 or len(B) == 0:
            return 0.0 if len(A) == len(B) else np.inf
        D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
        return float(max(D.min(axis=1).max(), D.min(axis=0).max()))

    def to_dict(self) -> dict:
        return {"dedup_tol": self.dedup_tol, "points": io.points_to_json(self.points) if len(self) else []}

    @classmethod
    def from_dict(cls, d) -> "PointSet":
        pts = io.points_from_json(d["points"]) if d["points"] else ()
        return cls(pts, d.get("dedup_tol"))

    def __repr__(self):
        return f"PointSet({len(self)} points, dedup_tol={self.dedup_tol:g})"


# --- univariate roots -----------------------------------------------------

def _poly_coeffs(p) -> np.ndarray:
    if isinstance(p, MultiPoly):
        used = {v for exp, _ in p for v, e in enumerate(exp) if e}
        if len(used) > 1:
            raise ArityError("univariate_roots needs a polynomial in one variable")
        return p.univariate_coeffs(used.pop() if used else 0)
    return np.asarray(p, dtype=np.complex128)


def univariate_roots(p, cluster_tol: float | None = None) -> list:
    """All complex roots of a one-variable polynomial as (root, multiplicity).

    ``p`` is a MultiPoly depending on a single variable or an ascending
    coefficient array. Roots come from Aberth iteration started on a perturbed
    circle, are Newton-polished, and clustered within ``cluster_tol``.
    """
    c = _poly_coeffs(p)
    nz = np.nonzero(np.abs(c) > 0)[0]
    deg = int(nz[-1]) if nz.size else 0
    if deg < 1:
        raise DegreeError("need degree >= 1")
    c = c[: deg + 1]
    if abs(c[-1]) <= 1e-12:
        raise DegreeError(f"leading coefficient {abs(c[-1]):.3g} is numerically zero")
    cluster_tol = TOLERANCES["root_cluster"] if cluster_tol is None else cluster_tol
    monic = c / c[-1]
    center = -monic[-2] / deg
    # Fujiwara-type radius for the root spread
    k = np.arange(deg)
    radius = 2.0 * np.max(np.abs(monic[:-1]) ** (1.0 / (deg - k)))
    radius = max(radius, 1e-3)
    angles = 2 * np.pi * np.arange(deg) / deg + 0.4 / deg
    z0 = center + radius * np.exp(1j * angles)
    z, _ = aberth(c, z0.astype(np.complex128), TOLERANCES["aberth_tol"], TOLERANCES["aberth_max_iter"])
    z = _newton_polish(c, np.asarray(z))
    return _cluster(z, cluster_tol)


def _newton_polish(c, z, steps=3):
    dc = c[1:] * np.arange(1, len(c))
    for _ in range(steps):
        p = np.polynomial.polynomial.polyval(z, c)
        dp = np.polynomial.polynomial.polyval(z, dc)
        ok = np.abs(dp) > 0
        step = np.where(ok, p / np.where(ok, dp, 1), 0)
        trial = z - step
        better = np.abs(np.polynomial.polynomial.polyval(trial, c)) < np.abs(p)
        z = np.where(better, trial, z)
    return z


def _cluster(z, tol):
    order = np.lexsort((z.imag, z.real))
    groups: list[list] = []
    for r in z[order]:
        for g in groups:
            if abs(r - g[0]) <= tol * (1 + abs(g[0])):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def root_residual_ok(p, root, tol: float | None = None) -> bool:
    c = _poly_coeffs(p)
    tol = TOLERANCES["root_residual"] if tol is None else tol
    scale = np.sum(np.abs(c) * np.abs(root) ** np.arange(len(c)))
    return abs(np.polynomial.polynomial.polyval(root, c)) < tol * max(scale, 1.0)


# --- structural solving ---------------------------------------------------

def fixed_points_structural(g) -> PointSet:
    """Fix(g) for factory automorphisms, read off the stored shift core."""
    if g.provenance not in ("shift", "conjugation"):
        raise CapabilityError(f"no structural solver for provenance {g.provenance!r}")
    tags = list(g.factor_tags) or (["shift"] if g.provenance == "shift" else [])
    if "shift" not in tags:
        raise CapabilityError("automorphism carries no shift factor")
    i = tags.index("shift")
    H = g.factors[i]
    n = H.dim_in
    P = H.components[1] - MultiPoly.variable(n, 1)
    roots = [r for r, _ in univariate_roots(P.univariate_coeffs(0))]
    Z = np.zeros((len(roots), n), dtype=np.complex128)
    Z[:, 0] = roots
    for f in g.factors[i + 1:]:
        Z = f.eval_batch(Z)
    out = PointSet()
    for z in Z:
        out.add(z)
    return out.sorted()


# --- numeric solving ------------------------------------------------------

@dataclass
class FixedPointReport:
    found: PointSet
    residuals: list
    isolation_flags: list
    starts_used: int
    search_box: float
    diverged: int = 0
    merged: int = 0
    stalled: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "found": self.found.to_dict(),
            "residuals": [float(r) for r in self.residuals],
            "isolation_flags": [bool(b) for b in self.isolation_flags],
            "starts_used": self.starts_used,
            "search_box": self.search_box,
            "diverged": self.diverged,
            "merged": self.merged,
            "stalled": self.stalled,
            "seed": self.seed,
        }


def _map_dim(f) -> int:
    if hasattr(f, "dim_in"):
        if f.dim_in != f.dim_out:
            raise ArityError("fixed points need a square map")
        return f.dim_in
    return f.dim


def halton_box(n: int, count: int, box: float, seed=0) -> np.ndarray:
    """Scrambled Halton points in the centered box of radius ``box`` in C^n."""
    u = qmc.Halton(d=2 * n, scramble=True, seed=seed).random(count)
    u = box * (2 * u - 1)
    return u[:, :n] + 1j * u[:, n:]


def _norms(V):
    # diverging iterates overflow; they are counted and dropped, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        return np.linalg.norm(V, axis=1)


def _residual(f, Z):
    with np.errstate(over="ignore", invalid="ignore"):
        R = f.eval_batch(Z) - Z
    r = _norms(R)
    r[~np.isfinite(r)] = np.inf
    return R, r


def _newton_steps(J, R):
    try:
        return np.linalg.solve(J, R[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(R)
        for i in range(len(R)):
            out[i] = np.linalg.lstsq(J[i], R[i], rcond=None)[0]
        return out


def fixed_points_numeric(f, box: float, budget: int | None = None, tol: float | None = None,
                         seed=0, dedup_tol: float | None = None, max_iter: int | None = None,
                         starts=None) -> FixedPointReport:
    """Fixed points of ``f`` by damped multi-start Newton on f(z) - z.

    ``f`` needs ``eval_batch`` and ``jacobian_batch``. Starts are scrambled
    Halton points in the box of radius ``box`` (or the explicit ``starts``).
    """
    n = _map_dim(f)
    tol = TOLERANCES["newton_tol"] if tol is None else float(tol)
    if tol < 1e-14:
        raise PreconditionError("tol below 1e-14 is not achievable in double precision")
    if box <= 0:
        raise PreconditionError("search box radius must be positive")
    if starts is None:
        if budget is None:
            raise PreconditionError("give a start budget")
        if budget <= 0:
            raise PreconditionError("start budget must be positive")
        Z = halton_box(n, int(budget), box, seed)
    else:
        Z = np.atleast_2d(np.asarray(starts, dtype=np.complex128)).copy()
        if len(Z) == 0:
            raise PreconditionError("start budget must be positive")
    max_iter = TOLERANCES["newton_max_iter"] if max_iter is None else max_iter
    halvings = TOLERANCES["newton_max_halvings"]
    far = TOLERANCES["divergence_factor"] * box
    found = PointSet(dedup_tol=dedup_tol)
    found_res: list[float] = []
    counts = {"diverged": 0, "merged": 0, "stalled": 0}
    I = np.eye(n)

    alive = np.arange(len(Z))
    R, r = _residual(f, Z)
    for _ in range(max_iter + 1):
        if alive.size == 0:
            break
        Za, Ra, ra = Z[alive], R[alive], r[alive]
        bad = ~np.isfinite(ra) | ~(_norms(Za) <= far)
        conv = ~bad & (ra < tol)
        near = np.zeros(len(alive), bool)
        if len(found):
            D = np.linalg.norm(Za[:, None, :] - found.points[None, :, :], axis=2).min(axis=1)
            near = ~bad & ~conv & (D < found.dedup_tol)
        for i in np.nonzero(conv)[0]:
            z, rz = _polish(f, Za[i], ra[i], I)
            if found.add(z):
                found_res.append(rz)
            else:
                counts["merged"] += 1
        counts["diverged"] += int(bad.sum())
        counts["merged"] += int(near.sum())
        keep = ~(bad | conv | near)
        alive = alive[keep]
        if alive.size == 0:
            break
        Za, Ra, ra = Za[keep], Ra[keep], ra[keep]
        J = f.jacobian_batch(Za) - I
        step = _newton_steps(J, Ra)
        t = np.ones(len(alive))
        Zn = Za - step
        Rn, rn = _residual(f, Zn)
        for _h in range(halvings):
            worse = ~(rn < ra)
            if not worse.any():
                break
            t[worse] *= 0.5
            Zw = Za[worse] - t[worse, None] * step[worse]
            Rw, rw = _residual(f, Zw)
            Zn[worse], Rn[worse], rn[worse] = Zw, Rw, rw
        stuck = ~(rn < ra)
        counts["stalled"] += int(stuck.sum())
        Z[alive], R[alive], r[alive] = Zn, Rn, rn
        alive = alive[~stuck]
    else:
        counts["stalled"] += int(alive.size)

    order = found.order()
    keyed = found.sorted()
    residuals = [found_res[i] for i in order]
    flags = [is_isolated(f, p, tol=max(tol, rr) * 10) for p, rr in zip(keyed, residuals)]
    return FixedPointReport(keyed, residuals, flags, len(Z), float(box), seed=seed, **counts)


def _polish(f, z, rz, I, steps=3):
    for _ in range(steps):
        J = f.jacobian_batch(z[None])[0] - I
        try:
            zn = z - np.linalg.solve(J, f.eval_batch(z[None])[0] - z)
        except np.linalg.LinAlgError:
            break
        rn = float(np.linalg.norm(f.eval_batch(zn[None])[0] - zn))
        if not rn < rz:
            break
        z, rz = zn, rn
    return z, float(rz)


def is_isolated(f, z, tol: float | None = None, det_tol: float | None = None) -> bool:
    """True iff |det(Df(z) - I)| exceeds ``det_tol`` at the fixed point ``z``."""
    z = np.asarray(z, dtype=np.complex128).ravel()
    tol = TOLERANCES["fixes_tol"] if tol is None else tol
    det_tol = TOLERANCES["isolation_det"] if det_tol is None else det_tol
    r = float(np.linalg.norm(f.eval_batch(z[None])[0] - z))
    if not r < tol:
        raise PreconditionError(f"point is not fixed: |f(z) - z| = {r:.3g}")
    J = f.jacobian_batch(z[None])[0]
    return bool(abs(np.linalg.det(J - np.eye(len(z)))) > det_tol)


# --- retractions and determining sets -------------------------------------

def _evaluator(f):
    if hasattr(f, "eval_batch"):
        return f.eval_batch
    return f


def _samples(sampler, count):
    S = sampler(count) if callable(sampler) else sampler
    S = np.atleast_2d(np.asarray(S, dtype=np.complex128))
    if S.size == 0:
        raise PreconditionError("empty sample set")
    return S


@dataclass
class RetractionReport:
    retraction: bool
    trivial: str
    idempotence_residual: float
    identity_residual: float
    image_diameter: float
    samples: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _diameter(W) -> float:
    if len(W) < 2:
        return 0.0
    return float(np.linalg.norm(W[:, None, :] - W[None, :, :], axis=2).max())


def is_retraction(f, sampler, samples: int = 200, tol: float = 1e-9) -> RetractionReport:
    """Check f o f = f on sampled points and name the trivial cases.

    ``f`` is a batch evaluator (callable on an (M, n) array or an object with
    ``eval_batch``); ``sampler`` is a callable ``count -> points`` or an array.
    """
    F = _evaluator(f)
    Z = _samples(sampler, samples)
    W = np.asarray(F(Z))
    WW = np.asarray(F(W))
    idem = float(np.max(np.linalg.norm(WW - W, axis=1)))
    ident = float(np.max(np.linalg.norm(W - Z, axis=1)))
    diam = _diameter(W)
    retraction = idem < tol
    if ident < tol:
        trivial = "identity"
    elif diam < tol:
        trivial = "constant"
    else:
        trivial = "none"
    return RetractionReport(bool(retraction), trivial, idem, ident, diam, len(Z))


@dataclass
class Classification:
    verdict: str
    family: str
    witness: int | None
    members: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "family": self.family, "witness": self.witness,
                "members": self.members}


def classify_candidate_set(K, family, sampler, tol: float = 1e-8, family_name: str = "family",
                           samples: int = 400, outside_tol: float = 1e-6) -> Classification:
    """Classify K as determining / quasi_determining / neither relative to ``family``.

    Only the given finite family is examined, so the verdict never speaks for
    all automorphisms of the domain.
    """
    Kp = K.points if isinstance(K, PointSet) else np.atleast_2d(np.asarray(K, dtype=np.complex128))
    if len(Kp) == 0:
        raise PreconditionError("K is empty")
    if len(family) == 0:
        raise PreconditionError("family is empty")
    S = _samples(sampler, samples)
    dK = np.linalg.norm(S[:, None, :] - Kp[None, :, :], axis=2).min(axis=1)
    outside = dK > outside_tol
    members = []
    for j, f in enumerate(family):
        F = _evaluator(f)
        kres = float(np.max(np.linalg.norm(np.asarray(F(Kp)) - Kp, axis=1)))
        moved = np.linalg.norm(np.asarray(F(S)) - S, axis=1)
        members.append({
            "index": j,
            "fixes_K": kres < tol,
            "K_residual": kres,
            "identity": bool(moved.max() < tol),
            "fixes_outside": bool(np.any(moved[outside] < tol)),
        })
    fixing = [m for m in members if m["fixes_K"]]
    if all(m["identity"] for m in fixing):
        return Classification("determining", family_name, None, members)
    witness = next(m["index"] for m in fixing if not m["identity"])
    if all(m["identity"] or m["fixes_outside"] for m in fixing):
        return Classification("quasi_determining", family_name, witness, members)
    witness = next(m["index"] for m in fixing if not m["identity"] and not m["fixes_outside"])
    return Classification("neither", family_name, witness, members)


def check_fixed(f, points, tol: float | None = None) -> None:
    """Raise HypothesisViolation unless every point is fixed by ``f``."""
    tol = TOLERANCES["fixes_tol"] if tol is None else tol
    P = np.atleast_2d(np.asarray(points, dtype=np.complex128))
    r = np.linalg.norm(_evaluator(f)(P) - P, axis=1)
    if np.any(~(r < tol)):
        raise HypothesisViolation(f"map moves a required fixed point by {float(r.max()):.3g}")
