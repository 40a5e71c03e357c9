import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holofix.ball import (
    BallAutomorphism, HalfSpace, automorphism_fixing_pair, kobayashi_ball, kobayashi_distance,
    kobayashi_distance_batch, line_disc, line_fixed_check, mobius_involution, nearest_on_sphere,
    random_ball_automorphism, sample_ball, sample_line_in_ball, unitary_map,
)
from holofix.errors import CapabilityError, EmptyFeasibleSetError, InteriorityError, PreconditionError
from oracles import ball_distance, disc_mobius, grid_nearest, poincare_distance, random_unitary


def fd_jacobian(F, z, h=1e-6):
    E = h * np.eye(z.size)
    return ((F(z + E) - F(z - E)) / (2 * h)).T


ball_pt = st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6),
                    st.floats(-0.6, 0.6)).map(lambda t: np.array([t[0] + 1j * t[1], t[2] + 1j * t[3]]) * 0.8)


# --- Mobius involutions ---------------------------------------------------

def test_mobius_at_origin_is_negation():
    z = np.array([0.2, -0.3j])
    assert np.allclose(mobius_involution([0, 0])(z), -z)


def test_mobius_disc_formula():
    phi = mobius_involution([0.5])
    for z in (0, 0.5, 0.1 + 0.3j, -0.7j):
        assert abs(phi([z])[0] - disc_mobius(0.5, z)) < 1e-15
    assert abs(phi([0])[0] - 0.5) < 1e-15 and abs(phi([0.5])[0]) < 1e-15


def test_mobius_involution_property(rng):
    a = sample_ball(2, 1, rng, 0.9)[0]
    phi = mobius_involution(a)
    Z = sample_ball(2, 100, rng, 0.99)
    assert np.abs(phi.eval_batch(phi.eval_batch(Z)) - Z).max() < 1e-12
    assert np.allclose(phi(np.zeros(2)), a) and np.linalg.norm(phi(a)) < 1e-15


def test_mobius_interiority():
    with pytest.raises(InteriorityError):
        mobius_involution([1.0, 0])
    with pytest.raises(InteriorityError):
        mobius_involution([1 - 1e-13, 0])


def test_mobius_preserves_ball(rng):
    phi = mobius_involution(sample_ball(3, 1, rng, 0.95)[0])
    Z = sample_ball(3, 500, rng, 0.999)
    assert np.all(np.linalg.norm(phi.eval_batch(Z), axis=1) < 1)


def test_jacobian_matches_finite_differences(rng):
    f = random_ball_automorphism(3, rng)
    z = sample_ball(3, 1, rng, 0.7)[0]
    assert np.abs(f.jacobian(z) - fd_jacobian(f.eval_batch, z)).max() < 1e-8


def test_automorphism_word_algebra(rng):
    f, g = random_ball_automorphism(2, rng), random_ball_automorphism(2, rng)
    Z = sample_ball(2, 20, rng, 0.9)
    assert np.allclose(f.inverse().eval_batch(f.eval_batch(Z)), Z, atol=1e-12)
    assert np.allclose(f.then(g).eval_batch(Z), g.eval_batch(f.eval_batch(Z)), atol=1e-14)
    h = BallAutomorphism.from_dict(f.to_dict())
    assert np.array_equal(h.eval_batch(Z), f.eval_batch(Z))


def test_center_and_unitary_part(rng):
    U = random_unitary(2, rng)
    a = np.array([0.3, -0.1j])
    f = mobius_involution(a).then(unitary_map(U))
    assert np.allclose(f.center_param, a, atol=1e-14)
    assert np.allclose(f.unitary_part, U, atol=1e-12)


def test_unitary_map_rejects_nonunitary():
    with pytest.raises(ValueError):
        unitary_map(np.array([[2, 0], [0, 1]]))


# --- Kobayashi distance ---------------------------------------------------

def test_distance_basics():
    z = np.array([0.3, 0.2j])
    assert kobayashi_distance(z, z) == 0
    for t in np.arange(1, 10) / 10:
        assert abs(kobayashi_distance([0, 0], [t, 0]) - math.atanh(t)) < 1e-12


def test_distance_matches_disc_oracle():
    for z, w in ((0.3, -0.5j), (0.9, 0.85), (0.1 + 0.2j, -0.4)):
        assert abs(kobayashi_distance([z], [w]) - poincare_distance(z, w)) < 1e-12


def test_distance_matches_closed_form_oracle(rng):
    p = sample_ball(3, 1, rng, 0.9)[0]
    W = sample_ball(3, 50, rng, 0.95)
    assert np.abs(kobayashi_distance_batch(p, W) - ball_distance(p, W)).max() < 1e-10


def test_distance_invariance(rng):
    Z, W = sample_ball(2, 100, rng, 0.9), sample_ball(2, 100, rng, 0.9)
    for z, w in zip(Z, W):
        g = random_ball_automorphism(2, rng)
        assert abs(kobayashi_distance(g(z), g(w)) - kobayashi_distance(z, w)) < 1e-9


@given(ball_pt, ball_pt, ball_pt)
def test_triangle_and_symmetry(x, y, z):
    dxy, dyz, dxz = kobayashi_distance(x, y), kobayashi_distance(y, z), kobayashi_distance(x, z)
    assert dxz <= dxy + dyz + 1e-9
    assert abs(dxy - kobayashi_distance(y, x)) < 1e-12


def test_distance_requires_interior():
    with pytest.raises(InteriorityError):
        kobayashi_distance([0, 0], [1, 0])


def test_kobayashi_ball():
    B = kobayashi_ball([0, 0], math.atanh(0.5))
    assert abs(B.euclidean_radius - 0.5) < 1e-15
    assert B.contains([[0.49, 0]])[0] and not B.contains([[0.51, 0]])[0]
    S = kobayashi_ball([0.2, 0], 0.0)
    assert S.is_singleton and S.contains([[0.2, 0]])[0]
    with pytest.raises(PreconditionError):
        kobayashi_ball([0, 0], -1)


# --- nearest point on a sphere --------------------------------------------

def test_nearest_central_sphere_is_radial(rng):
    a = np.array([0.1 + 0.05j, -0.2j])
    res = nearest_on_sphere(a, [0, 0], 0.5)
    assert np.abs(res.point - 0.5 * a / np.linalg.norm(a)).max() < 1e-6
    assert res.unique and not res.cap_boundary


def test_nearest_radial_distance():
    res = nearest_on_sphere([0.25, 0], [0, 0], 0.5)
    assert abs(res.distance - (math.atanh(0.5) - math.atanh(0.25))) < 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_nearest_matches_grid_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    c0 = sample_ball(2, 1, rng, 0.4)[0]
    R = rng.uniform(0.1, 0.5)
    p = sample_ball(2, 1, rng, 0.8)[0]
    if abs(np.linalg.norm(p - c0) - R) < 0.05:
        p = 0.5 * p
    res = nearest_on_sphere(p, c0, R)
    x, d = grid_nearest(p, c0, R)
    assert abs(res.distance - d) < 1e-8
    assert np.linalg.norm(res.point - x) < 1e-4


def test_nearest_with_half_space_matches_oracle():
    p = np.array([0.05, -0.3j])
    hs = HalfSpace.im_at_least(1, -0.1)
    res = nearest_on_sphere(p, [0, 0], 0.5, hs)
    x, d = grid_nearest(p, [0, 0], 0.5, half_space=(1, -0.1))
    assert res.cap_boundary
    # the grid only approaches the cap edge, so its value bounds the minimum from above
    assert d - 1e-4 < res.distance <= d + 1e-12
    # dense search on the edge circle Im z2 = -0.1 of the sphere
    X, T = np.meshgrid(np.linspace(-0.4898, 0.4898, 2001), np.linspace(0, 2 * np.pi, 721))
    E = np.stack([np.sqrt(0.24 - X**2) * np.exp(1j * T), X - 0.1j], axis=-1).reshape(-1, 2)
    dist = ball_distance(p, E)
    i = int(np.argmin(dist))
    assert abs(res.distance - dist[i]) < 1e-6 and np.linalg.norm(res.point - E[i]) < 1e-3


def test_nearest_empty_feasible_set():
    with pytest.raises(EmptyFeasibleSetError):
        nearest_on_sphere([0, 0], [0, 0], 0.5, HalfSpace.im_at_least(1, 0.9))


def test_nearest_result_serializes_single_cluster():
    d = nearest_on_sphere([0.1, 0], [0, 0], 0.5).to_dict()
    assert d["uniqueness_gap"] is None and d["single_cluster"]


# --- automorphisms fixing a pair ------------------------------------------

def test_fixing_pair_fixes_points_and_line(rng):
    a, b = sample_ball(2, 2, rng, 0.8)
    f = automorphism_fixing_pair(a, b, 1.3)
    assert np.linalg.norm(f(a) - a) < 1e-12 and np.linalg.norm(f(b) - b) < 1e-12
    chk = line_fixed_check(f, a, b, samples=50)
    assert chk.precondition_met and chk.max_residual < 1e-10
    off = sample_ball(2, 20, rng, 0.9)
    assert np.max(np.linalg.norm(f.eval_batch(off) - off, axis=1)) > 1e-3


def test_fixing_pair_zero_angle_is_identity(rng):
    a, b = sample_ball(3, 2, rng, 0.8)
    f = automorphism_fixing_pair(a, b, 0.0)
    Z = sample_ball(3, 30, rng, 0.9)
    assert np.abs(f.eval_batch(Z) - Z).max() < 1e-12


def test_fixing_pair_errors():
    with pytest.raises(CapabilityError):
        automorphism_fixing_pair([0.1], [0.2], 1.0)
    with pytest.raises(PreconditionError):
        automorphism_fixing_pair([0.1, 0], [0.1, 0], 1.0)


def test_line_check_controls(rng):
    a, b = np.array([0.2, 0.1]), np.array([-0.1, 0.3j])
    chk = line_fixed_check(lambda Z: Z, a, b)
    assert chk.precondition_met and chk.max_residual == 0
    U = np.diag([1j, 1])
    chk = line_fixed_check(unitary_map(U), a, b)
    assert not chk.precondition_met


def test_line_disc_matches_sampling(rng):
    a, b = np.array([0.3, 0.1j]), np.array([-0.2, 0.4])
    Z = sample_line_in_ball(a, b, 500, rng)
    assert np.all(np.linalg.norm(Z, axis=1) < 1)
    t0, rho2 = line_disc(a, b - a)
    edge = a + (t0 + math.sqrt(rho2)) * (b - a)
    assert abs(np.linalg.norm(edge) - 1) < 1e-12
