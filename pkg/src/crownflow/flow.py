"""Harmonic map heat flow on an equivariant mesh.

tau^k = Delta_g u^k + Gamma^k_ij(u) <grad u^i, grad u^j>_g with the upper
half-space Christoffel symbols; the Laplace-Beltrami part is the cotangent
form over unfolded wedges divided by the lumped vertex mass, the quadratic
part an area-weighted average of per-triangle linear-interpolation gradients.
Time stepping is explicit geodesic Euler with Jacobi updates: every tension
vector is evaluated on the old state, then pushed through exp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .halfspace import dist_h3, exp_h3
from .meshes import EquivariantMesh


@dataclass
class FlowConfig:
    cfl: float = 0.2
    t_max: float = 200.0
    tol_tau: float = 1e-5
    cadence: int = 25
    max_steps: int = 2_000_000
    dt_cap: float = float("inf")


@dataclass
class MapState:
    points: np.ndarray  # (N, 3)
    t: float = 0.0

    def copy(self) -> "MapState":
        return MapState(self.points.copy(), self.t)


@dataclass
class Diagnostics:
    times: list[float] = field(default_factory=list)
    steps: list[int] = field(default_factory=list)
    sup_tau: list[float] = field(default_factory=list)
    max_density: list[float] = field(default_factory=list)
    core_energy: list[float] = field(default_factory=list)
    sup_drift: list[float] = field(default_factory=list)  # sup d(u_t, u_0)
    trace_point: list[tuple] = field(default_factory=list)
    axis_dist: list[tuple] = field(default_factory=list)
    displacement: list[tuple] = field(default_factory=list)
    equivariance: list[float] = field(default_factory=list)
    converged: bool = False

    def as_dict(self) -> dict:
        return {
            "times": self.times,
            "sup_tau": self.sup_tau,
            "max_density": self.max_density,
            "core_energy": self.core_energy,
            "sup_drift": self.sup_drift,
            "equivariance": self.equivariance,
            "converged": self.converged,
        }


def _bad_state(u: np.ndarray):
    if not np.all(np.isfinite(u)) or np.any(u[:, 2] <= 0):
        raise FloatingPointError("map state left the upper half-space")


def tension_field(state: MapState, mesh: EquivariantMesh) -> np.ndarray:
    """Per-vertex ambient tension vectors (zero rows on Dirichlet vertices)."""
    u = state.points
    _bad_state(u)
    n = mesh.n_vertices
    u0 = u[mesh.wed_v]
    u1 = mesh.gather(u, mesh.wed_n1, mesh.wed_w1)
    u2 = mesh.gather(u, mesh.wed_n2, mesh.wed_w2)

    contrib = mesh.wed_c1[:, None] * (u1 - u0) + mesh.wed_c2[:, None] * (u2 - u0)
    lap = np.stack(
        [np.bincount(mesh.wed_v, weights=contrib[:, k], minlength=n) for k in range(3)],
        axis=-1,
    )

    gx = (
        mesh.wed_gx[:, 0, None] * u0
        + mesh.wed_gx[:, 1, None] * u1
        + mesh.wed_gx[:, 2, None] * u2
    )
    gy = (
        mesh.wed_gy[:, 0, None] * u0
        + mesh.wed_gy[:, 1, None] * u1
        + mesh.wed_gy[:, 2, None] * u2
    )
    # flat-chart gradient pair sums, area-averaged (conformally invariant)
    a13 = gx[:, 0] * gx[:, 2] + gy[:, 0] * gy[:, 2]
    a23 = gx[:, 1] * gx[:, 2] + gy[:, 1] * gy[:, 2]
    a33 = (
        gx[:, 0] ** 2
        + gy[:, 0] ** 2
        + gx[:, 1] ** 2
        + gy[:, 1] ** 2
        - gx[:, 2] ** 2
        - gy[:, 2] ** 2
    )
    w = mesh.wed_a3
    acc = np.stack(
        [
            np.bincount(mesh.wed_v, weights=w * a13, minlength=n),
            np.bincount(mesh.wed_v, weights=w * a23, minlength=n),
            np.bincount(mesh.wed_v, weights=w * a33, minlength=n),
        ],
        axis=-1,
    )

    h = u[:, 2]
    tau = np.empty((n, 3))
    tau[:, 0] = lap[:, 0] - 2.0 * acc[:, 0] / h
    tau[:, 1] = lap[:, 1] - 2.0 * acc[:, 1] / h
    tau[:, 2] = lap[:, 2] + acc[:, 2] / h
    tau /= mesh.mass[:, None]
    tau[mesh.dirichlet] = 0.0
    return tau


def tension_sup(state: MapState, mesh: EquivariantMesh, tau=None) -> float:
    """sup of the metric norm |tau| over free vertices."""
    if tau is None:
        tau = tension_field(state, mesh)
    norms = np.linalg.norm(tau, axis=1) / state.points[:, 2]
    sel = mesh.free
    return float(norms[sel].max()) if np.any(sel) else 0.0


def energy_density(state: MapState, mesh: EquivariantMesh) -> np.ndarray:
    """e = <grad u, grad u>_g,h per vertex (area-averaged over wedges)."""
    u = state.points
    u0 = u[mesh.wed_v]
    u1 = mesh.gather(u, mesh.wed_n1, mesh.wed_w1)
    u2 = mesh.gather(u, mesh.wed_n2, mesh.wed_w2)
    gx = (
        mesh.wed_gx[:, 0, None] * u0
        + mesh.wed_gx[:, 1, None] * u1
        + mesh.wed_gx[:, 2, None] * u2
    )
    gy = (
        mesh.wed_gy[:, 0, None] * u0
        + mesh.wed_gy[:, 1, None] * u1
        + mesh.wed_gy[:, 2, None] * u2
    )
    dens = (np.sum(gx**2, axis=1) + np.sum(gy**2, axis=1)) / u0[:, 2] ** 2
    out = np.bincount(mesh.wed_v, weights=mesh.wed_a3 * dens, minlength=mesh.n_vertices)
    return out / mesh.mass


def core_energy(state: MapState, mesh: EquivariantMesh, regions=("core",)) -> float:
    """(1/2) integral of e dvol_g over the tagged triangles."""
    u = state.points
    sel = np.isin(mesh.tri_region, np.asarray(regions, dtype=object))
    tv, tw = mesh.tri_v[sel], mesh.tri_w[sel]
    vals = np.stack(
        [mesh.gather(u, tv[:, k], tw[:, k]) for k in range(3)], axis=1
    )  # (T,3slots,3)
    gx = np.einsum("tk,tkc->tc", mesh.tri_gx[sel], vals)
    gy = np.einsum("tk,tkc->tc", mesh.tri_gy[sel], vals)
    inv_h2 = np.mean(1.0 / vals[:, :, 2] ** 2, axis=1)
    dens = (np.sum(gx**2, axis=1) + np.sum(gy**2, axis=1)) * inv_h2
    return float(0.5 * np.sum(mesh.tri_area[sel] * dens))


def step(
    state: MapState,
    mesh: EquivariantMesh,
    dt: float,
    cfg: FlowConfig | None = None,
    tau: np.ndarray | None = None,
) -> MapState:
    """One Jacobi geodesic-Euler step; Dirichlet vertices stay frozen.

    All tension vectors are evaluated on the incoming state (pass `tau` to
    reuse an evaluation) before any vertex moves.
    """
    cfg = cfg or FlowConfig()
    dt_max = min(mesh.cfl_dt(cfg.cfl), cfg.dt_cap)
    if dt > dt_max * (1 + 1e-12):
        raise ValueError(f"dt={dt} violates the CFL bound {dt_max}")
    if tau is None:
        tau = tension_field(state, mesh)
    new = state.points.copy()
    sel = mesh.free
    new[sel] = exp_h3(state.points[sel], dt * tau[sel])
    return MapState(new, state.t + dt)


def flow(
    state0: MapState,
    mesh: EquivariantMesh,
    cfg: FlowConfig,
    monitors_words: list | None = None,
    trace_vertex: int | None = None,
    axes: list | None = None,
    snapshot_cb=None,
) -> tuple[MapState, Diagnostics]:
    """Iterate until sup|tau| < tol_tau or t >= t_max."""
    from .halfspace import dist_to_geodesic

    diag = Diagnostics()
    state = state0.copy()
    u_init = state0.points.copy()
    dt = min(mesh.cfl_dt(cfg.cfl), cfg.dt_cap)
    if trace_vertex is None:
        free_ids = np.nonzero(mesh.free)[0]
        trace_vertex = int(free_ids[len(free_ids) // 2]) if len(free_ids) else 0

    def record(tau_sup, k):
        if diag.times and diag.times[-1] == state.t:
            return
        diag.times.append(state.t)
        diag.steps.append(k)
        diag.sup_tau.append(tau_sup)
        diag.max_density.append(float(energy_density(state, mesh)[mesh.free].max()))
        diag.core_energy.append(core_energy(state, mesh, ("core", "end")))
        drift = dist_h3(state.points[mesh.free], u_init[mesh.free])
        diag.sup_drift.append(float(np.max(drift)))
        p = state.points[trace_vertex]
        diag.trace_point.append(tuple(float(x) for x in p))
        if axes:
            diag.axis_dist.append(tuple(float(dist_to_geodesic(p, g)) for g in axes))
        if monitors_words:
            disp = tuple(
                float(dist_h3(m.apply_h3(p), p)) for m in monitors_words
            )
            diag.displacement.append(disp)
        diag.equivariance.append(mesh.equivariance_residual(state.points))
        if snapshot_cb is not None:
            snapshot_cb(state, mesh)

    k = 0
    tau = tension_field(state, mesh)
    tau_sup = tension_sup(state, mesh, tau)
    record(tau_sup, k)
    while state.t < cfg.t_max and k < cfg.max_steps:
        if tau_sup < cfg.tol_tau:
            diag.converged = True
            break
        dt_k = min(dt, cfg.t_max - state.t)
        state = step(state, mesh, dt_k, cfg, tau)
        k += 1
        tau = tension_field(state, mesh)
        tau_sup = tension_sup(state, mesh, tau)
        if k % cfg.cadence == 0 or state.t >= cfg.t_max:
            record(tau_sup, k)
    if tau_sup < cfg.tol_tau:
        diag.converged = True
    record(tau_sup, k)
    return state, diag


# ---------------------------------------------------------------------------
# monitors


@dataclass
class MonitorReport:
    name: str
    passed: bool
    detail: str


def _bounded_tail(series, rel_tol=0.02, abs_tol=1e-6) -> tuple[bool, str]:
    """No sustained growth across the last quarter of the series."""
    s = np.asarray(series, dtype=float)
    if len(s) < 8:
        return True, "series too short to flag"
    q = 3 * len(s) // 4
    head_max = s[:q].max()
    tail_max = s[q:].max()
    growth = tail_max - head_max
    scale = max(abs(head_max), 1.0)
    ok = growth <= rel_tol * scale + abs_tol
    return bool(ok), f"head max {head_max:.6g}, tail max {tail_max:.6g}"


def monitors(diag: Diagnostics, energy_rel_tol: float = 1e-8) -> list[MonitorReport]:
    out = []
    for name, series in (
        ("sup_drift_bounded", diag.sup_drift),
        ("max_density_bounded", diag.max_density),
    ):
        ok, detail = _bounded_tail(series)
        out.append(MonitorReport(name, ok, detail))
    if diag.displacement:
        arr = np.asarray(diag.displacement)
        for j in range(arr.shape[1]):
            ok, detail = _bounded_tail(arr[:, j])
            out.append(MonitorReport(f"displacement_{j}_bounded", ok, detail))
    if diag.axis_dist:
        arr = np.asarray(diag.axis_dist)
        for j in range(arr.shape[1]):
            ok, detail = _bounded_tail(arr[:, j])
            out.append(MonitorReport(f"axis_dist_{j}_bounded", ok, detail))
    e = np.asarray(diag.core_energy)
    if len(e) > 1:
        # per-step budget: records may span several steps
        span = np.maximum(np.diff(np.asarray(diag.steps, dtype=float)), 1.0)
        rises = np.diff(e) - span * energy_rel_tol * np.maximum(np.abs(e[:-1]), 1e-30)
        ok = bool(np.all(rises <= 0))
        out.append(
            MonitorReport(
                "energy_monotone",
                ok,
                f"max per-step rise {float(np.max(np.diff(e) / span)):.3e}",
            )
        )
    eq = max(diag.equivariance) if diag.equivariance else 0.0
    out.append(MonitorReport("equivariance", eq < 1e-10, f"max residual {eq:.3e}"))
    out.append(
        MonitorReport(
            "converged", diag.converged, f"final sup|tau| {diag.sup_tau[-1]:.3e}"
        )
    )
    return out


def monitors_pass(reports: list[MonitorReport], require=()) -> bool:
    names = {r.name: r.passed for r in reports}
    return all(names.get(n, False) for n in require) and all(
        r.passed for r in reports if r.name != "converged"
    )
