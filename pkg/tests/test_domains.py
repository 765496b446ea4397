import math

import numpy as np
import pytest

from crownflow.domains import crowned_torus_mesh, punctured_torus_mesh
from crownflow.flow import (
    FlowConfig,
    MapState,
    core_energy,
    energy_density,
    flow,
    monitors,
    tension_sup,
)
from crownflow.halfspace import dist_h3
from crownflow.initmap import (
    crowned_initial_map,
    identity_embedding,
    perturb_state,
    tension_audit,
)


class TestPuncturedTorusMesh:
    def test_build_and_shape(self):
        mesh = punctured_torus_mesh(refine=1)
        assert mesh.n_vertices > 100
        assert np.all(mesh.lam2 > 0)
        assert mesh.meta["kind"] == "punctured_torus"
        # every free vertex strictly inside the truncation window
        free_y = mesh.pos[mesh.free].imag
        assert free_y.max() < mesh.meta["y_trunc"]

    def test_identity_is_discrete_near_harmonic(self):
        from crownflow.flow import tension_field

        mesh = punctured_torus_mesh(refine=1)
        st = identity_embedding(mesh)
        tau = tension_field(st, mesh)
        norms = np.linalg.norm(tau, axis=1) / st.points[:, 2]
        # interior rows are exact (linear reproduction); only the handful of
        # chart-junction ring vertices carry a pointwise consistency defect
        assert np.quantile(norms[mesh.free], 0.95) < mesh.h_mesh
        assert np.median(norms[mesh.free]) < 1e-10

    def test_equivariance_checks_tiny(self):
        mesh = punctured_torus_mesh(refine=1)
        st = identity_embedding(mesh)
        assert mesh.equivariance_residual(st.points) < 1e-10

    def test_flow_returns_to_identity(self):
        mesh = punctured_torus_mesh(refine=1)
        ident = identity_embedding(mesh)
        start = perturb_state(ident, mesh, 0.3, seed=5)
        assert float(np.max(dist_h3(start.points, ident.points))) <= 0.3 + 1e-9
        cfg = FlowConfig(cfl=0.08, tol_tau=1e-5, t_max=200.0, cadence=50)
        state, diag = flow(start, mesh, cfg)
        assert diag.converged, diag.sup_tau[-1]
        err = float(np.max(dist_h3(state.points, ident.points)))
        assert err < 10 * mesh.h_mesh, (err, mesh.h_mesh)
        reps = {r.name: r for r in monitors(diag)}
        assert reps["energy_monotone"].passed, reps["energy_monotone"].detail
        assert max(diag.equivariance) < 1e-10


class TestCrownedTorusMesh:
    def test_build(self):
        mesh, info = crowned_torus_mesh([1, 1, 1, 1], refine=1, y_trunc=3.0, r_trunc=4.0)
        assert np.any(mesh.region == "end")
        assert np.any(mesh.region == "core")
        assert info["strip_ids"].shape[0] >= 5

    def test_initial_map_continuous_and_low_tension(self):
        mesh, info = crowned_torus_mesh([1, 1, 1, 1], refine=1, y_trunc=3.0, r_trunc=4.0)
        st = crowned_initial_map(mesh, info)
        assert np.all(st.points[:, 2] > 0)
        # strip values sit on the boundary geodesic
        strip = mesh.chart == 1
        assert np.abs(st.points[strip, 0] - info["boundary_x"]).max() < 1e-12
        audit = tension_audit(st, mesh, info)
        # harmonic away from the graft seam: strip interior decay fit exists
        assert audit["sup_tau_end"] < 5.0
        assert audit["crown_decay_slope"] < 0.0

    def test_energy_density_values(self):
        mesh, info = crowned_torus_mesh([1, 1, 1, 1], refine=1, y_trunc=3.0, r_trunc=4.0)
        st = crowned_initial_map(mesh, info)
        e = energy_density(st, mesh)
        strip_inner = (mesh.chart == 1) & mesh.free
        # collapse map with zero twist has density 1; seam rows are mixed
        h = mesh.pos.imag
        deep = strip_inner & (h > 1.0)
        assert np.abs(e[deep] - 1.0).max() < 0.05
