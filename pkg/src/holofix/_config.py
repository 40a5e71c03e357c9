"""Process-wide switches and the default tolerance table.

``HOLOFIX_NUMBA=0`` selects the pure-numpy kernels; anything else (or unset)
uses the numba-compiled ones when numba imports cleanly.
"""

import os

_flag = os.environ.get("HOLOFIX_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

# Every tolerance and numeric default used anywhere in the package. CLI
# artifacts embed this table so certificates are self-describing.
TOLERANCES = {
    # polycore
    "prune_rel": 1e-14,
    "compose_term_cap": 1_000_000,
    # automorphism_factory
    "root_separation": 1e-8,
    "precondition_separation": 1e-6,
    "precondition_retries": 64,
    "automorphism_residual": 1e-10,
    # fixed_point_solver
    "dedup_tol": 1e-8,
    "isolation_det": 1e-8,
    "newton_tol": 1e-10,
    "newton_max_iter": 100,
    "newton_max_halvings": 20,
    "divergence_factor": 10.0,
    "starts_per_root": 500,
    "root_residual": 1e-10,
    "root_cluster": 1e-6,
    "aberth_tol": 1e-14,
    "aberth_max_iter": 500,
    "retraction_tol": 1e-9,
    "fixes_tol": 1e-8,
    # ball_geometry
    "interior_margin": 1e-12,
    "fd_step": 1e-7,
    "sphere_starts": 64,
    "sphere_position_tol": 1e-10,
    "sphere_max_iter": 3000,
    "cluster_radius": 1e-6,
    "uniqueness_gap": 1e-9,
    "cap_boundary_tol": 1e-9,
    "map_fixes_tol": 1e-10,
    # shell_domain
    "witness_margin": 1e-6,
    "line_contains_tol": 1e-6,
    "noncollinear": 1e-8,
    "probe_offset": 1e-3,
    "probe_floor": 1e-6,
    "witness_ball_radius": 0.999,
    "connectivity_resolution": 0.05,
    # linearization
    "eigen_tol": 1e-8,
    "phi_nonzero": 1e-10,
    "mc_samples": 10_000,
}


def tolerance_table():
    """Return a fresh copy of the default tolerance table."""
    return dict(TOLERANCES)
