import math

import numpy as np
import pytest

from crownflow.flow import (
    Diagnostics,
    FlowConfig,
    MapState,
    core_energy,
    energy_density,
    flow,
    monitors,
    step,
    tension_field,
    tension_sup,
)
from crownflow.halfspace import MobiusMap, dist_h3
from crownflow.meshes import flat_torus_mesh, rect_chart_mesh


def smooth_state(mesh):
    z = mesh.pos
    x, y = z.real, z.imag
    pts = np.stack(
        [
            0.3 * np.sin(2 * x) + 0.1 * y,
            0.2 * np.cos(x + y),
            np.exp(0.2 * np.sin(3 * x) + 0.1 * np.cos(2 * y)),
        ],
        axis=-1,
    )
    return MapState(pts)


def discrete_energy(mesh, u):
    return core_energy(MapState(u), mesh, tuple(np.unique(mesh.tri_region)))


class TestTension:
    def test_constant_map_zero(self):
        mesh = rect_chart_mesh(8, 8)
        u = np.tile([0.3, -0.2, 1.7], (mesh.n_vertices, 1))
        tau = tension_field(MapState(u), mesh)
        assert np.abs(tau).max() < 1e-14

    def test_totally_geodesic_embedding_zero(self):
        mesh = rect_chart_mesh(10, 12, 0, 1, 1.0, 2.0, lambda z: 1.0 / z.imag**2)
        u = np.stack([mesh.pos.real, np.zeros(mesh.n_vertices), mesh.pos.imag], axis=-1)
        st = MapState(u)
        assert tension_sup(st, mesh) < 1e-12
        e = energy_density(st, mesh)
        assert np.abs(e[mesh.free] - 2.0).max() < 1e-12

    def test_gradient_oracle_refinement(self):
        # discrete tau vs central differences of the discrete energy
        errs = []
        for n in (8, 16, 32):
            mesh = rect_chart_mesh(n, n, 0, 1, 0, 1, lambda z: 1 + 0.3 * z.real)
            st = smooth_state(mesh)
            tau = tension_field(st, mesh)
            ids = mesh.meta["grid_ids"]
            v = int(ids[n // 2, n // 2])
            worst = 0.0
            for k in range(3):
                eps = 1e-6 * max(1.0, abs(st.points[v, k]))
                up = st.points.copy()
                up[v, k] += eps
                dn = st.points.copy()
                dn[v, k] -= eps
                fd = (discrete_energy(mesh, up) - discrete_energy(mesh, dn)) / (2 * eps)
                expected = -tau[v, k] * mesh.mass[v] / st.points[v, 2] ** 2
                worst = max(worst, abs(fd - expected) / max(abs(expected), 1e-12))
            errs.append(worst)
        errs = np.array(errs)
        rates = np.log2(errs[:-1] / errs[1:])
        assert errs[-1] < errs[0]
        assert rates.mean() >= 1.0, (errs, rates)


class TestClosedFormOracle:
    """Symbolic check of the printed vs corrected nonconvergent solution."""

    @staticmethod
    def _residual(u, conf):
        import sympy as sp

        x, y, t = sp.symbols("x y t", positive=True)
        subs = {"x": x, "y": y, "t": t}
        u = [expr(x, y, t) for expr in u]
        ux = [sp.diff(c, x) for c in u]
        uy = [sp.diff(c, y) for c in u]
        lap = [sp.diff(c, x, 2) + sp.diff(c, y, 2) for c in u]
        u3 = u[2]

        def s(i, j):
            return ux[i] * ux[j] + uy[i] * uy[j]

        gam = [-2 * s(0, 2) / u3, -2 * s(1, 2) / u3, (s(0, 0) + s(1, 1) - s(2, 2)) / u3]
        lamc = conf(x, y)
        tau = [sp.simplify((lap[k] + gam[k]) / lamc**2) for k in range(3)]
        return [sp.simplify(sp.diff(u[k], t) - tau[k]) for k in range(3)]

    def test_literal_form_fails(self):
        import sympy as sp

        t0 = sp.Symbol("t0", positive=True)
        lit = (
            lambda x, y, t: x,
            lambda x, y, t: y,
            lambda x, y, t: sp.sqrt(2 * y**2 * t + t0**2),
        )
        res_flat = self._residual(lit, lambda x, y: 1)
        res_hyp = self._residual(lit, lambda x, y: 1 / y)
        assert any(r != 0 for r in res_flat)
        assert any(r != 0 for r in res_hyp)

    def test_corrected_form_exact(self):
        import sympy as sp

        t0 = sp.Symbol("t0", positive=True)
        fix = (
            lambda x, y, t: x,
            lambda x, y, t: 0 * x,
            lambda x, y, t: sp.sqrt(2 * t + t0**2),
        )
        assert all(r == 0 for r in self._residual(fix, lambda x, y: 1))


def divergent_mesh(n=12):
    return flat_torus_mesh(n, n, MobiusMap.translation(1.0), MobiusMap.identity())


def horizontal_line_state(mesh, t0=1.0, t=0.0):
    x = mesh.pos.real
    h = math.sqrt(2 * t + t0**2)
    pts = np.stack([x, np.zeros_like(x), np.full_like(x, h)], axis=-1)
    return MapState(pts, t)


class TestDivergentFixture:
    def test_tension_is_exact(self):
        mesh = divergent_mesh()
        st = horizontal_line_state(mesh, 1.0)
        tau = tension_field(st, mesh)
        assert np.abs(tau[:, :2]).max() < 1e-13
        assert np.abs(tau[:, 2] - 1.0).max() < 1e-12

    def test_tracks_closed_form(self):
        mesh = divergent_mesh()
        t0 = 1.0
        cfg = FlowConfig(cfl=0.2, t_max=4.0, tol_tau=0.0, cadence=50)
        state, diag = flow(horizontal_line_state(mesh, t0), mesh, cfg)
        exact = horizontal_line_state(mesh, t0, state.t)
        dt = mesh.cfl_dt(0.2)
        err = float(np.max(dist_h3(state.points, exact.points)))
        assert err < 10 * (dt + mesh.h_mesh**2), (err, dt)
        assert not diag.converged

    def test_monitor_flags_growth(self):
        mesh = divergent_mesh(8)
        cfg = FlowConfig(cfl=0.2, t_max=4.0, tol_tau=0.0, cadence=10)
        _, diag = flow(horizontal_line_state(mesh, 1.0), mesh, cfg)
        reps = {r.name: r for r in monitors(diag)}
        assert not reps["sup_drift_bounded"].passed
        assert not reps["converged"].passed
        assert reps["energy_monotone"].passed
        assert reps["equivariance"].passed
        assert max(diag.equivariance) < 1e-10


class TestStepping:
    def test_fixed_point(self):
        mesh = rect_chart_mesh(6, 6, 0, 1, 1, 2, lambda z: 1 / z.imag**2)
        u = np.stack([mesh.pos.real, np.zeros(mesh.n_vertices), mesh.pos.imag], axis=-1)
        st = MapState(u)
        out = step(st, mesh, mesh.cfl_dt())
        assert np.abs(out.points - st.points).max() < 1e-12

    def test_immediate_exit_when_harmonic(self):
        mesh = rect_chart_mesh(6, 6, 0, 1, 1, 2, lambda z: 1 / z.imag**2)
        u = np.stack([mesh.pos.real, np.zeros(mesh.n_vertices), mesh.pos.imag], axis=-1)
        state, diag = flow(MapState(u), mesh, FlowConfig(tol_tau=1e-8, t_max=10))
        assert diag.converged and state.t == 0.0

    def test_cfl_violation_raises(self):
        mesh = rect_chart_mesh(6, 6)
        st = smooth_state(mesh)
        with pytest.raises(ValueError):
            step(st, mesh, 100.0)

    def test_energy_decreases_from_perturbation(self):
        mesh = rect_chart_mesh(10, 10, 0, 1, 1, 2, lambda z: 1 / z.imag**2)
        rng = np.random.default_rng(3)
        u = np.stack([mesh.pos.real, np.zeros(mesh.n_vertices), mesh.pos.imag], axis=-1)
        sel = mesh.free
        u[sel] += 0.05 * rng.standard_normal(u[sel].shape)
        u[:, 2] = np.maximum(u[:, 2], 0.2)
        cfg = FlowConfig(cfl=0.08, tol_tau=1e-7, t_max=50.0, cadence=5)
        state, diag = flow(MapState(u), mesh, cfg)
        assert diag.converged
        reps = {r.name: r for r in monitors(diag)}
        assert reps["energy_monotone"].passed, reps["energy_monotone"].detail
        ident = np.stack([mesh.pos.real, np.zeros(mesh.n_vertices), mesh.pos.imag], -1)
        assert float(np.max(dist_h3(state.points, ident))) < 10 * mesh.h_mesh
