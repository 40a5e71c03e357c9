"""The shell domain: the unit ball of C^2 minus half-space-clipped closed shells.

Generation k contributes two origin-centered shells,

    odd   [1 - eps_k,   1 - delta_k]   clipped to Im z2 >= -1/2,
    even  [1 - 4 eps_k, 1 - 4 delta_k] clipped to Im z2 <=  1/2,

and generation-1 radii are reused for two special shells about alpha and beta.
Every complex line through the domain meets the outer sphere of some shell on
the correct side of its half-space; that meeting point (the witness) anchors
the third-fixed-point argument.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import io
from ._config import TOLERANCES, tolerance_table
from .ball import HalfSpace, inner, line_disc, nearest_on_sphere, sample_ball, sample_line_in_ball
from .errors import CertificateFailure, PreconditionError, ScheduleError, WitnessNotFound


# --- schedules ------------------------------------------------------------

@dataclass(frozen=True)
class ShellSchedule:
    eps: tuple
    delta: tuple
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        object.__setattr__(self, "alpha", tuple(complex(c) for c in self.alpha))
        object.__setattr__(self, "beta", tuple(complex(c) for c in self.beta))
        self.validate()

    @property
    def generations(self) -> int:
        return len(self.eps)

    @classmethod
    def geometric(cls, S: int = 6, base: float = 16.0, ratio: float = 0.5) -> "ShellSchedule":
        """eps_k = base^-k, delta_k = ratio * eps_k, alpha = (eps_1, 0), beta = (0, eps_1)."""
        if S < 1:
            raise ScheduleError("generations", "need at least one generation")
        eps = [base ** -k for k in range(1, S + 1)]
        delta = [ratio * e for e in eps]
        return cls(tuple(eps), tuple(delta), (eps[0], 0.0), (0.0, eps[0]))

    @classmethod
    def default(cls) -> "ShellSchedule":
        return cls.geometric()

    @classmethod
    def literal(cls, S: int = 1) -> "ShellSchedule":
        """eps_k = 2^-(4k)!, delta_k = 2^-((4k)!+1), alpha = (2^-8!, 0), beta = (0, 2^-8!).

        Only representable pieces survive: anything below the smallest double
        raises ScheduleError naming the representability constraint.
        """
        exps = [math.factorial(4 * k) for k in range(1, S + 1)] + [math.factorial(8)]
        worst = max(exps) + 1
        if worst > 1074:
            raise ScheduleError("representability",
                                f"2^-{worst} underflows double precision (smallest subnormal is 2^-1074)")
        eps = [2.0 ** -e for e in exps[:S]]
        delta = [2.0 ** -(e + 1) for e in exps[:S]]
        c = 2.0 ** -exps[-1]
        return cls(tuple(eps), tuple(delta), (c, 0.0), (0.0, c))

    def validate(self) -> None:
        eps, delta = self.eps, self.delta
        S = len(eps)
        if S < 1 or len(delta) != S:
            raise ScheduleError("generations", "eps and delta need the same positive length")
        if len(self.alpha) != 2 or len(self.beta) != 2:
            raise ScheduleError("centers", "alpha and beta live in C^2")
        for k in range(S):
            e, d = eps[k], delta[k]
            if not (math.isfinite(e) and math.isfinite(d)) or d <= 0 or 1.0 - d == 1.0:
                raise ScheduleError("representability", f"generation {k + 1} radii are not representable")
            if not d < e:
                raise ScheduleError("delta_below_eps", f"need 0 < delta_k < eps_k at k={k + 1}")
            if not 4 * d > e:
                raise ScheduleError("even_inside_odd", f"need 4 delta_k > eps_k at k={k + 1}")
            if not 4 * e < 1:
                raise ScheduleError("positive_radii", f"need 4 eps_k < 1 at k={k + 1}")
            if k + 1 < S:
                if not eps[k + 1] < delta[k]:
                    raise ScheduleError("generation_order", f"need eps_{k + 2} < delta_{k + 1}")
                if not 4 * eps[k + 1] < delta[k]:
                    raise ScheduleError("generation_disjoint",
                                        f"need 4 eps_{k + 2} < delta_{k + 1} so closed shells of "
                                        "consecutive generations do not touch")
        for name in ("alpha", "beta"):
            c = np.array(getattr(self, name))
            if not np.linalg.norm(c) <= eps[0]:
                raise ScheduleError("center_size", f"|{name}| must not exceed eps_1")
            if not np.any(c):
                raise ScheduleError("center_size", f"{name} must be nonzero")

    def to_dict(self) -> dict:
        return {"eps": list(self.eps), "delta": list(self.delta),
                "alpha": io.point_to_json(self.alpha), "beta": io.point_to_json(self.beta)}

    @classmethod
    def from_dict(cls, d) -> "ShellSchedule":
        if "eps" not in d:
            return cls.geometric(int(d.get("S", 6)), float(d.get("base", 16.0)), float(d.get("ratio", 0.5)))
        return cls(tuple(d["eps"]), tuple(d["delta"]),
                   tuple(io.point_from_json(d["alpha"])), tuple(io.point_from_json(d["beta"])))


# --- shells and domain ----------------------------------------------------

@dataclass(frozen=True)
class Shell:
    """Closed shell inner <= |z - center| <= outer intersected with a half-space.

    ``sign`` = +1 means Im z2 >= -1/2, sign = -1 means Im z2 <= 1/2.
    """

    index: int
    center: tuple
    inner_radius: float
    outer_radius: float
    sign: int

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center, dtype=np.complex128)

    @property
    def half_space(self) -> HalfSpace:
        return HalfSpace(1, self.sign, -0.5 * self.sign)

    @property
    def witness_radius(self) -> float:
        return self.outer_radius

    def contains(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        r = np.linalg.norm(Z - self.center_array, axis=1)
        return (r >= self.inner_radius) & (r <= self.outer_radius) & self.half_space.contains(Z)

    def to_dict(self) -> dict:
        return {"index": self.index, "center": io.point_to_json(self.center),
                "inner_radius": self.inner_radius, "outer_radius": self.outer_radius,
                "half_space": self.half_space.to_dict()}


@dataclass(frozen=True)
class ShellDomain:
    schedule: ShellSchedule
    shells: tuple

    @property
    def central_shells(self) -> list:
        return [s for s in self.shells if s.index > 2]

    def shell(self, index: int) -> Shell:
        return self.shells[index - 1]

    def contains(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        ok = np.linalg.norm(Z, axis=1) < 1.0
        for s in self.shells:
            ok &= ~s.contains(Z)
        return ok

    def __contains__(self, z) -> bool:
        return bool(self.contains(z)[0])

    def sample(self, count: int, rng, radius: float = 1.0) -> np.ndarray:
        """Uniform samples of D intersected with the ball of the given radius."""
        rng = np.random.default_rng(rng)
        out = []
        have = 0
        while have < count:
            Z = sample_ball(2, 2 * (count - have) + 16, rng, radius)
            Z = Z[self.contains(Z)]
            out.append(Z)
            have += len(Z)
        return np.vstack(out)[:count]

    def disjointness(self) -> list:
        """Pairs of same-center shells whose closed radius intervals meet."""
        bad = []
        for i, s in enumerate(self.shells):
            for t in self.shells[i + 1:]:
                if s.center == t.center and not (s.outer_radius < t.inner_radius or t.outer_radius < s.inner_radius):
                    bad.append((s.index, t.index))
        return bad

    def to_dict(self) -> dict:
        return {"schedule": self.schedule.to_dict(), "shells": [s.to_dict() for s in self.shells],
                "overlapping_pairs": self.disjointness()}


def build_domain(schedule: ShellSchedule | None = None) -> ShellDomain:
    """Materialize Omega_1 .. Omega_{2S+2} for a validated schedule."""
    sch = ShellSchedule.default() if schedule is None else schedule
    sch.validate()
    e1, d1 = sch.eps[0], sch.delta[0]
    shells = [Shell(1, sch.alpha, 1 - e1, 1 - d1, 1), Shell(2, sch.beta, 1 - 4 * e1, 1 - 4 * d1, -1)]
    zero = (0j, 0j)
    for k, (e, d) in enumerate(zip(sch.eps, sch.delta), start=1):
        shells.append(Shell(2 * k + 1, zero, 1 - e, 1 - d, 1))
        shells.append(Shell(2 * k + 2, zero, 1 - 4 * e, 1 - 4 * d, -1))
    D = ShellDomain(sch, tuple(shells))
    if not D.contains(np.zeros(2))[0]:
        raise ScheduleError("origin_in_domain", "the special shells swallow the origin")
    bad = D.disjointness()
    if bad:
        raise ScheduleError("generation_disjoint", f"closed shells {bad} overlap")
    return D


# --- line witnesses -------------------------------------------------------

def distance_to_line(q, a, u) -> float:
    w = np.asarray(q, dtype=np.complex128) - a
    return float(np.linalg.norm(w - (inner(w, u) / inner(u, u)) * u))


def _circle_extreme(u2, sign):
    """Unit e^{i psi} maximizing sign * Im(e^{i psi} u2)."""
    if u2 == 0:
        return 1.0 + 0j
    return sign * 1j * abs(u2) / u2


def _circle_intersections(t0, rho, T0, P):
    d = abs(T0 - t0)
    if d == 0 or d > rho + P or d < abs(rho - P):
        return []
    x = (d * d + rho * rho - P * P) / (2 * d)
    h = math.sqrt(max(rho * rho - x * x, 0.0))
    e = (T0 - t0) / d
    return [t0 + (x + 1j * h) * e, t0 + (x - 1j * h) * e]


@dataclass
class Witness:
    shell: int
    point: np.ndarray
    t: complex
    margin: float
    center: np.ndarray
    radius: float
    circle_radius: float
    sphere_residual: float
    case: str = ""

    def to_dict(self) -> dict:
        return {"shell": self.shell, "case": self.case, "point": io.point_to_json(self.point), "t": io.complex_to_json(self.t),
                "margin": self.margin, "center": io.point_to_json(self.center), "radius": self.radius,
                "circle_radius": self.circle_radius, "sphere_residual": self.sphere_residual}


def shell_witness(shell: Shell, a, u, ball_radius: float | None = None):
    """Best witness on the shell's outer sphere along L(t) = a + t u, or None.

    The sphere meets L in a circle of the t-plane; the half-space margin is
    affine in t, so its maximum on the circle is explicit. For spheres not
    contained in the ball the circle is cut to the arc inside |z| < ball_radius.
    """
    c0 = shell.center_array
    R = shell.witness_radius
    t0, rho2 = line_disc(a, u, c0, R)
    if rho2 <= 0:
        return None
    rho = math.sqrt(rho2)
    u2, sign = u[1], shell.sign

    def margin(t):
        z2 = a[1] + t * u2
        return sign * (z2.imag + 0.5 * sign)

    t_best = t0 + rho * _circle_extreme(u2, sign)
    if np.linalg.norm(c0) + R >= 1.0:
        Rb = TOLERANCES["witness_ball_radius"] if ball_radius is None else ball_radius
        T0, P2 = line_disc(a, u, None, Rb)
        if P2 <= 0:
            return None
        P = math.sqrt(P2)
        if abs(t_best - T0) >= P:
            ends = _circle_intersections(t0, rho, T0, P)
            if not ends:
                return None
            t_best = max(ends, key=margin)
    z = a + t_best * u
    return Witness(shell.index, z, complex(t_best), float(margin(t_best)), c0, R,
                   float(rho * np.linalg.norm(u)), float(abs(np.linalg.norm(z - c0) - R)))


def _candidate_shells(D: ShellDomain, a, u) -> tuple:
    tol = TOLERANCES["line_contains_tol"]
    through_zero = distance_to_line(np.zeros(2), a, u) < tol
    if not through_zero:
        shells = sorted(D.central_shells, key=lambda s: (s.witness_radius, s.index))
        return "origin_not_on_line", shells
    through_alpha = distance_to_line(D.schedule.alpha, a, u) < tol
    through_beta = distance_to_line(D.schedule.beta, a, u) < tol
    if through_alpha:
        return "alpha_on_line", [D.shell(2)]
    if through_beta:
        return "beta_on_line", [D.shell(1)]
    return "origin_on_line", [D.shell(1), D.shell(2)]


def line_witness(D: ShellDomain, a, b) -> Witness:
    """First shell (boundary-ward) whose outer sphere meets L(a, b) with margin > tolerance."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if np.linalg.norm(a - b) < TOLERANCES["root_separation"]:
        raise PreconditionError("a and b coincide")
    if not D.contains(np.vstack([a, b])).all():
        raise PreconditionError("a and b must lie in the domain")
    u = b - a
    case, shells = _candidate_shells(D, a, u)
    tried = []
    for s in shells:
        w = shell_witness(s, a, u)
        tried.append({"shell": s.index, "margin": None if w is None else w.margin})
        if w is not None and w.margin > TOLERANCES["witness_margin"]:
            w.case = case
            return w
    raise WitnessNotFound(f"no witness within the truncated schedule ({case})",
                          {"case": case, "tried": tried})


# --- third fixed point ----------------------------------------------------

def noncollinearity(a, b, c) -> float:
    """Smallest singular value of [b - a, c - a] with unit columns."""
    M = np.column_stack([b - a, c - a])
    nrm = np.linalg.norm(M, axis=0)
    if np.any(nrm == 0):
        return 0.0
    return float(np.linalg.svd(M / nrm, compute_uv=False)[-1])


@dataclass
class RigidityCertificate:
    a: np.ndarray
    b: np.ndarray
    witness: Witness
    case: str
    probe: np.ndarray
    probe_offset: float
    third_point: np.ndarray
    distance: float
    uniqueness_gap: float
    cap_interior: bool
    noncollinearity: float
    probe_in_domain: bool
    attempts: list = field(default_factory=list)
    seed: int = 0

    @property
    def passed(self) -> bool:
        return (self.cap_interior and self.uniqueness_gap > TOLERANCES["uniqueness_gap"]
                and self.noncollinearity > TOLERANCES["noncollinear"])

    def to_dict(self) -> dict:
        return {
            "pair": [io.point_to_json(self.a), io.point_to_json(self.b)],
            "line": {"base": io.point_to_json(self.a), "direction": io.point_to_json(self.b - self.a)},
            "case": self.case,
            "witness": self.witness.to_dict(),
            "probe": io.point_to_json(self.probe),
            "probe_offset": self.probe_offset,
            "probe_in_domain": self.probe_in_domain,
            "third_point": io.point_to_json(self.third_point),
            "kobayashi_distance": self.distance,
            "uniqueness_gap": None if math.isinf(self.uniqueness_gap) else self.uniqueness_gap,
            "cap_interior": self.cap_interior,
            "noncollinearity": self.noncollinearity,
            "attempts": self.attempts,
            "passed": self.passed,
            "seed": self.seed,
            "tolerances": tolerance_table(),
        }


def _probe(witness: Witness, u, offset):
    radial = witness.point - witness.center
    s = complex(inner(u, radial))
    if abs(s) == 0:
        return None
    dt = np.conj(s) / abs(s) * offset / np.linalg.norm(u)
    return witness.point + dt * u


def third_fixed_point(D: ShellDomain, a, b, probe_offset: float | None = None, seed=0,
                      starts: int | None = None) -> RigidityCertificate:
    """Certificate that any map fixing a, b (and L) must also fix an off-line point c.

    The probe p sits on L just outside the witness sphere; c is the Kobayashi
    nearest point to p on that sphere within the shell's half-space. The
    offset is halved until c is unique and off the cap boundary.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    w = line_witness(D, a, b)
    u = b - a
    shell = D.shell(w.shell)
    offset = TOLERANCES["probe_offset"] if probe_offset is None else float(probe_offset)
    floor = TOLERANCES["probe_floor"]
    attempts = []
    while offset >= floor:
        p = _probe(w, u, offset)
        if p is None:
            attempts.append({"offset": offset, "outcome": "tangent_line"})
            break
        if not np.linalg.norm(p) < 1.0 - TOLERANCES["interior_margin"]:
            attempts.append({"offset": offset, "outcome": "probe_outside_ball"})
            offset /= 2
            continue
        res = nearest_on_sphere(p, w.center, w.radius, shell.half_space, starts=starts, seed=seed)
        nc = noncollinearity(a, b, res.point)
        unique = res.uniqueness_gap > TOLERANCES["uniqueness_gap"]
        attempts.append({"offset": offset, "cap_boundary": res.cap_boundary,
                         "uniqueness_gap": None if math.isinf(res.uniqueness_gap) else res.uniqueness_gap,
                         "noncollinearity": nc})
        if not res.cap_boundary and unique:
            cert = RigidityCertificate(a, b, w, w.case, p, offset, res.point, res.distance,
                                       res.uniqueness_gap, True, nc, bool(D.contains(p)[0]), attempts, seed)
            if nc <= TOLERANCES["noncollinear"]:
                raise CertificateFailure("third point lies on the line through a and b",
                                         cert.to_dict())
            return cert
        offset /= 2
    raise CertificateFailure("no cap-interior unique nearest point above the probe floor",
                             {"witness": w.to_dict(), "attempts": attempts})


def recheck_certificate(D: ShellDomain, cert: RigidityCertificate) -> bool:
    """Recompute every residual of a certificate from its stored points."""
    shell = D.shell(cert.witness.shell)
    z, c = cert.witness.point, cert.third_point
    ok = abs(np.linalg.norm(z - shell.center_array) - shell.witness_radius) < 1e-10
    ok &= bool(shell.half_space.value(z)[0] > TOLERANCES["witness_margin"])
    ok &= abs(np.linalg.norm(c - shell.center_array) - shell.witness_radius) < 1e-10
    ok &= bool(shell.half_space.value(c)[0] > TOLERANCES["cap_boundary_tol"])
    ok &= distance_to_line(cert.probe, cert.a, cert.b - cert.a) < 1e-12
    res = nearest_on_sphere(cert.probe, shell.center_array, shell.witness_radius, shell.half_space,
                            seed=cert.seed)
    ok &= bool(np.linalg.norm(res.point - c) < 1e-9)
    ok &= noncollinearity(cert.a, cert.b, c) > TOLERANCES["noncollinear"]
    return bool(ok) == cert.passed


# --- rigidity report ------------------------------------------------------

STAGES = ("fixes_a", "fixes_b", "fixes_line", "fixes_third_point", "identity")


def rigidity_report(D: ShellDomain, a, b, candidate_maps, samples: int = 100, seed=0,
                    tol: float | None = None, certificate: RigidityCertificate | None = None) -> dict:
    """Walk each candidate map through the proof chain and record the first failed stage."""
    tol = TOLERANCES["map_fixes_tol"] if tol is None else tol
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    cert = third_fixed_point(D, a, b, seed=seed) if certificate is None else certificate
    line_pts = sample_line_in_ball(a, b, 50, seed)
    dom_pts = D.sample(samples, seed)
    results = []
    for i, f in enumerate(candidate_maps):
        F = f.eval_batch if hasattr(f, "eval_batch") else f

        def moved(Z):
            Z = np.atleast_2d(Z)
            return float(np.max(np.linalg.norm(np.asarray(F(Z)) - Z, axis=1)))

        checks = [moved(a), moved(b), moved(line_pts), moved(cert.third_point), moved(dom_pts)]
        passed, failed_at = [], None
        for stage, r in zip(STAGES, checks):
            if r < tol:
                passed.append(stage)
            else:
                failed_at = stage
                break
        results.append({"index": i, "passed_stages": passed, "failed_at": failed_at,
                        "residuals": dict(zip(STAGES, checks))})
    return {"certificate": cert.to_dict(), "candidates": results}


# --- connectivity diagnostic ----------------------------------------------

def connectivity_check(D: ShellDomain, resolution: float | None = None) -> dict:
    """Grid-graph connectivity of D in R^4 at the given spacing (diagnostic only).

    Shells thinner than the spacing are invisible to the grid.
    """
    h = TOLERANCES["connectivity_resolution"] if resolution is None else resolution
    g = np.arange(-1 + h / 2, 1, h)
    X = np.stack(np.meshgrid(g, g, g, g, indexing="ij"), axis=-1).reshape(-1, 4)
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    mask = D.contains(Z).reshape((len(g),) * 4)
    labels, count = ndimage.label(mask)
    sizes = np.bincount(labels.ravel())[1:]
    return {"resolution": h, "cells": int(mask.sum()), "components": int(count),
            "largest_fraction": float(sizes.max() / mask.sum()) if count else 0.0}
