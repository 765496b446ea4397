"""Pipeline stages behind the CLI: check, build, metric, init, flow, report.

Artifacts are deterministic: fixed iteration orders, seeds from the config,
JSON with sorted keys, shortest-roundtrip float formatting.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import RunConfig
from .domains import crowned_torus_mesh, punctured_torus_mesh
from .flow import (
    Diagnostics,
    FlowConfig,
    MapState,
    core_energy,
    energy_density,
    flow,
    monitors,
    tension_field,
    tension_sup,
)
from .halfspace import Geodesic, bp, classify, dist_h3, dist_to_geodesic, translation_length
from .initmap import (
    crowned_initial_map,
    fuchsian_premap,
    identity_embedding,
    perturb_state,
    tension_audit,
)
from .metrics import pole_interp_profile, zero_interp_coeffs, zero_interp_verify
from .quaddiff import (
    PrincipalPart,
    chain_from_framing,
    compatible_with_boundary,
    compatible_with_chain,
    fit_principal_part,
    hopf_from_grid,
)
from .surfaces import (
    classify_degenerate,
    develop,
    fg_from_rep,
    fuchsian_shadow,
    holonomy,
    is_type_preserving,
    peripheral_ends,
    peripheral_monodromy,
    semisimple_pair,
    validate_surface,
)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def run_check(cfg: RunConfig) -> dict:
    """Hypothesis checks: surface, triangulation, type, degeneracy,
    principal-part compatibility."""
    report: dict = {"ok": True, "violations": [], "warnings": []}

    sr = validate_surface(cfg.surface)
    report["surface"] = {"chi": sr.chi, "dimension": sr.dimension, "valid": sr.valid}
    report["violations"] += [f"surface: {e}" for e in sr.errors]
    report["warnings"] += [f"surface: {w}" for w in sr.warnings]

    ct = cfg.triangulation.compiled()
    mismatches = ct.matches_surface(cfg.surface)
    report["violations"] += [f"triangulation: {m}" for m in mismatches]
    if report["violations"]:
        report["ok"] = False
        return report

    dev = develop(ct, cfg.coords)
    rep = holonomy(dev)
    report["relator_residual"] = rep.relator_residual
    if rep.relator_residual > 1e-9:
        report["violations"].append(
            f"holonomy: consistency residual {rep.relator_residual:.3e} > 1e-9"
        )

    ok_type, problems = is_type_preserving(rep, cfg.surface)
    report["type_preserving"] = ok_type
    report["violations"] += [f"type: {p} (type-preserving hypothesis)" for p in problems]

    kind, case = classify_degenerate(rep)
    report["degeneracy"] = {"kind": kind, "case": case}
    if kind != "nondegenerate":
        report["violations"].append(f"degenerate framed representation (case {case})")

    # principal-part compatibility per end
    ends = peripheral_ends(ct)
    kinds = dict(zip(ct.interior_vertices, cfg.surface.puncture_kinds))
    for end in ends:
        key = f"{'puncture' if end[0] == 'puncture' else 'boundary'}_{end[1]}"
        pp = cfg.principal_parts.get(key)
        if pp is None:
            report["warnings"].append(f"{key}: no principal part prescribed")
            continue
        mono = peripheral_monodromy(rep, end)
        if end[0] == "puncture":
            if pp.order > 2:
                report["violations"].append(
                    f"{key}: interior punctures carry poles of order <= 2"
                )
                continue
            length = 0.0
            if kinds.get(end[1]) == "cylinder":
                if classify(mono) == "loxodromic":
                    length = translation_length(mono)
            if pp.order == 2 or pp.order <= 1:
                target = (
                    compatible_with_boundary(pp, length)
                    if pp.order == 2
                    else length == 0.0
                )
                if not target:
                    report["violations"].append(
                        f"{key}: boundary-length compatibility fails "
                        f"(L={length:.6g}, leading={pp.leading!r})"
                    )
        else:
            if pp.order < 3:
                report["violations"].append(
                    f"{key}: crown ends need poles of order >= 3"
                )
                continue
            if classify(mono) != "loxodromic":
                continue  # already reported by the type check
            chain = chain_from_framing(rep, end[1])
            if pp.order % 2 == 1:
                report["warnings"].append(
                    f"{key}: odd pole order, residue condition dropped"
                )
            if not compatible_with_chain(pp, chain):
                report["violations"].append(
                    f"{key}: chain compatibility fails (m={chain.m}, n={pp.order})"
                )
    report["ok"] = not report["violations"]
    return report


def build_rep(cfg: RunConfig):
    ct = cfg.triangulation.compiled()
    dev = develop(ct, cfg.coords)
    rep = holonomy(dev)
    return dev, rep


def rep_summary(rep) -> dict:
    back = fg_from_rep(rep)
    return {
        "generators": [
            {"a": [g.a.real, g.a.imag], "b": [g.b.real, g.b.imag],
             "c": [g.c.real, g.c.imag], "d": [g.d.real, g.d.imag]}
            for g in rep.generators
        ],
        "relator_residual": rep.relator_residual,
        "coordinates_roundtrip": [[z.real, z.imag] for z in back],
    }


def build_mesh(cfg: RunConfig, refine: int | None = None):
    refine = cfg.flow.get("refine", 1) if refine is None else refine
    y_trunc = float(cfg.metric.get("y_trunc", 3.0))
    if cfg.fixture == "once_punctured_torus":
        mesh = punctured_torus_mesh(cfg.coords, refine=refine, y_trunc=y_trunc)
        return mesh, mesh.meta
    if cfg.fixture == "one_boundary_torus":
        r_trunc = float(cfg.metric.get("r_trunc", 8.0))
        return crowned_torus_mesh(
            cfg.coords, refine=refine, y_trunc=y_trunc, r_trunc=r_trunc
        )
    raise StageError(
        "build",
        "general triangulations are validated and developed, but meshing is "
        "implemented for the torus fixtures",
    )


def build_initial_map(cfg: RunConfig, mesh, info) -> MapState:
    if info.get("kind") == "punctured_torus":
        state = identity_embedding(mesh)
        mag = float(cfg.flow.get("perturbation", 0.0))
        if mag > 0:
            state = perturb_state(state, mesh, mag, int(cfg.flow.get("seed", 0)))
        return state
    state = crowned_initial_map(mesh, info)
    return state


def flow_config(cfg: RunConfig) -> FlowConfig:
    fb = cfg.flow
    return FlowConfig(
        cfl=float(fb.get("cfl", 0.2)),
        t_max=float(fb.get("t_max", 200.0)),
        tol_tau=float(fb.get("tol_tau", 1e-5)),
        cadence=int(fb.get("cadence", 25)),
    )


def hopf_fit_report(state: MapState, info, pp: PrincipalPart) -> dict:
    """Fit the crown-end Hopf data in the pinned puncture chart."""
    ids = info["strip_ids"]
    sv, hv = info["strip_s"], info["strip_h"]
    Z = sv[None, :] + 1j * hv[:, None]
    idx = np.array([[int(v) for v in row] for row in ids])
    U = state.points[idx]
    zz, phi = hopf_from_grid(Z, U)
    band = (zz.imag > hv[-1] / 3) & (zz.imag < 2 * hv[-1] / 3)
    alpha1 = pp.coeffs[0]
    w = (16.0 * alpha1**2) / zz[band] ** 2
    dzdw = -2.0 * alpha1 * w ** (-1.5)
    phw = phi[band] * dzdw**2
    fit = fit_principal_part(w.ravel(), phw.ravel(), pp.order, n_smooth=2)
    rel = [
        min(abs(a - b), abs(a + b)) / max(abs(b), 1e-300)
        for a, b in zip(fit.part.coeffs, pp.coeffs)
    ]
    return {
        "prescribed": [[c.real, c.imag] for c in pp.coeffs],
        "fitted": [[c.real, c.imag] for c in fit.part.coeffs],
        "relative_errors": rel,
        "stderr": list(fit.stderr),
        "phi_band_mean": [float(phi[band].real.mean()), float(phi[band].imag.mean())],
    }


def framing_proxy(state: MapState, mesh, rep) -> list[dict]:
    """Distance to a geodesic into each sampled Farey point along rays."""
    out = []
    rays = mesh.meta.get("rays")
    if rays is None:
        rays = _default_rays(mesh, rep)
    for name, ids, geod in rays:
        d = [float(dist_to_geodesic(state.points[v], geod)) for v in ids]
        tail = d[len(d) // 2:]
        decreasing = all(b <= a + 1e-9 for a, b in zip(tail, tail[1:]))
        out.append({"ray": name, "distances": d, "tail_decreasing": decreasing})
    return out


def _default_rays(mesh, rep):
    """Vertical ascents toward the infinite Farey corner on each vertical."""
    beta = rep.framing[0]
    g1 = rep.generators[0]
    other = g1.apply(beta)
    if other.chordal(beta) < 1e-9:
        other = rep.generators[1].apply(beta)
    geod = Geodesic(other, beta)
    rays = []
    for x in sorted({round(z.real, 9) for z in mesh.pos[mesh.chart == 0]}):
        sel = (mesh.chart == 0) & (np.abs(mesh.pos.real - x) < 1e-9)
        col = [int(v) for v in np.nonzero(sel)[0]]
        if len(col) >= 8:
            col.sort(key=lambda v: mesh.pos[v].imag)
            rays.append((f"x={x}", col, geod))
        if len(rays) == 2:
            break
    if not rays:
        free_ids = np.nonzero(mesh.free)[0][:8]
        rays = [("fallback", [int(v) for v in free_ids], geod)]
    return rays


def chain_proxy(state: MapState, mesh, info) -> dict:
    """Deep strip rows must hug the chain geodesic from the framing."""
    rep = info["rep"]
    chain = chain_from_framing(rep, 0)
    geod = chain.geodesics(1)[0]
    ids, hv = info["strip_ids"], info["strip_h"]
    rows = []
    for k in range(1, ids.shape[0]):
        row = np.array([int(v) for v in ids[k]])
        d = dist_to_geodesic(state.points[row], geod)
        rows.append((float(hv[k]), float(np.max(d))))
    deep = [d for _, d in rows[len(rows) // 2:]]
    return {
        "profile": rows,
        "deep_max": max(deep),
        "within_h": bool(max(deep) < 10 * mesh.h_mesh),
    }


def final_report(
    state: MapState,
    mesh,
    info,
    cfg: RunConfig,
    diag: Diagnostics,
    premap: MapState | None = None,
) -> dict:
    rep = info["rep"]
    report = {
        "converged": diag.converged,
        "final_sup_tau": diag.sup_tau[-1],
        "h_mesh": mesh.h_mesh,
        "equivariance_max": max(diag.equivariance) if diag.equivariance else 0.0,
        "monitors": [asdict(m) for m in monitors(diag)],
        "framing_proxy": framing_proxy(state, mesh, rep),
    }
    if info.get("kind") == "crowned_torus":
        report["chain_proxy"] = chain_proxy(state, mesh, info)
        key = "boundary_0"
        if key in cfg.principal_parts and cfg.principal_parts[key].order >= 3:
            report["hopf_fit"] = hopf_fit_report(state, info, cfg.principal_parts[key])
    if premap is not None:
        p0 = np.array([0.0, 0.0, 1.0])
        d1 = dist_h3(premap.points[mesh.free], p0)
        d2 = dist_h3(state.points[mesh.free], p0)
        report["premap_distance_stat"] = float(np.max(np.abs(d1 - d2)))
    return report


# ---------------------------------------------------------------------------
# artifact emission


def _fmt(x) -> str:
    return repr(float(x))


def write_json(path: Path, data: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_snapshot(path: Path, state: MapState, mesh):
    path.parent.mkdir(parents=True, exist_ok=True)
    e = energy_density(state, mesh)
    tau = tension_field(state, mesh)
    tn = np.linalg.norm(tau, axis=1) / state.points[:, 2]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "chart", "re", "im", "x1", "x2", "x3", "e", "tau"])
        for v in range(mesh.n_vertices):
            w.writerow(
                [v, int(mesh.chart[v]), _fmt(mesh.pos[v].real), _fmt(mesh.pos[v].imag)]
                + [_fmt(x) for x in state.points[v]]
                + [_fmt(e[v]), _fmt(tn[v])]
            )


def write_diagnostics(path: Path, diag: Diagnostics):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "step", "sup_tau", "max_density", "core_energy", "sup_drift", "equivariance"])
        for row in zip(
            diag.times, diag.steps, diag.sup_tau, diag.max_density,
            diag.core_energy, diag.sup_drift, diag.equivariance,
        ):
            w.writerow([_fmt(row[0]), row[1]] + [_fmt(x) for x in row[2:]])


def write_profile_csv(path: Path, prof, n: int | None = None, eps: float | None = None):
    from .metrics import curvature_of_profile

    cur = curvature_of_profile(prof)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if n is not None and eps is not None:
            a, b, c = zero_interp_coeffs(n, eps)
            w.writerow(["zero_interp_coeffs", _fmt(a), _fmt(b), _fmt(c)])
        w.writerow(["r", "u", "du", "d2u", "K", "segment"])
        for r, u, du, d2u, K, seg in zip(
            prof.r, prof.u, prof.du, prof.d2u, cur["K"], prof.segment
        ):
            w.writerow([_fmt(r), _fmt(u), _fmt(du), _fmt(d2u), _fmt(K), seg])


def write_heatmap_svg(path: Path, mesh, values: np.ndarray, title: str):
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "crownflow"
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    core = mesh.chart == 0
    sc = ax.scatter(
        mesh.pos[core].real, mesh.pos[core].imag, c=values[core], s=6, cmap="viridis"
    )
    fig.colorbar(sc, ax=ax)
    ax.set_title(title)
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
