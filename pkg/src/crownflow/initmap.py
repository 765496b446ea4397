"""Equivariant initial maps: horodisk and collapse end models, pleating,
crown rotation ramps, blending, and the tension audit.

The Fuchsian identity embedding (x, y) -> (x, 0, y) is the premap for shadow
structures whose domain conformal structure is the quotient structure itself;
for general prescriptions the premap is polished by a plane-constrained run
of the flow (fuchsian_premap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .halfspace import (
    Geodesic,
    MobiusMap,
    axis,
    bp,
    classify,
    dist_h3,
    elliptic_about_axis,
    exp_h3,
    log_h3,
    translation_length,
)
from .flow import FlowConfig, MapState, flow, tension_field
from .meshes import EquivariantMesh


def ramp_c2(s):
    """Quintic C^2 ramp: 0 at 0, 1 at 1, vanishing first/second derivatives."""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


# ---------------------------------------------------------------------------
# end model maps


def align_parabolic(per: MobiusMap) -> MobiusMap:
    """M with M (z -> z+1) M^{-1} = per (or its inverse translation)."""
    if classify(per) != "parabolic":
        raise ValueError("horodisk model needs a parabolic peripheral")
    fp = per.fixed_points()[0]
    if fp.is_infinity:
        base = MobiusMap.identity()
    else:
        base = MobiusMap(fp.value, 1.0, 1.0, 0.0)  # infinity -> fixed point
    t = base.inverse() @ per @ base  # fixes infinity: z -> (a/d) z + b/d
    if abs(t.c) > 1e-9 or abs(t.a / t.d - 1.0) > 1e-8:
        raise ValueError("could not normalize the parabolic to a translation")
    import cmath

    sq = cmath.sqrt(t.b / t.d)
    return base @ MobiusMap(sq, 0, 0, 1.0 / sq)


def horodisk_map(per: MobiusMap):
    """Isometric horodisk embedding into a totally geodesic plane.

    Chart: cusp coordinates (x, y), hyperbolic factor 1/y^2, deck x -> x+1.
    The model (x, y) -> (x, 0, y) is conjugated so the deck matches `per`.
    Energy density is 2, tension vanishes.
    """
    m = align_parabolic(per)

    def f(z):
        z = np.asarray(z, dtype=complex)
        pts = np.stack([z.real, np.zeros(z.shape), z.imag], axis=-1)
        return m.apply_h3(pts)

    return f, m


def align_loxodromic(per: MobiusMap) -> tuple[MobiusMap, float, float]:
    """M, length, twist with M diag(e^{(l+i phi)/2}) M^{-1} = per."""
    if classify(per) != "loxodromic":
        raise ValueError("collapse model needs a loxodromic peripheral")
    g = axis(per)
    from .halfspace import frame_to_zero_infinity

    fr = frame_to_zero_infinity(g)
    t = fr @ per @ fr.inverse()  # fixes 0, inf: z -> k z
    k = t.a / t.d
    ell = abs(math.log(abs(k)))
    if math.log(abs(k)) < 0:  # swap ends so the translation goes upward
        fr = frame_to_zero_infinity(Geodesic(g.p2, g.p1))
        t = fr @ per @ fr.inverse()
        k = t.a / t.d
    return fr.inverse(), math.log(abs(k)), float(np.angle(k))


def collapse_map(per: MobiusMap, theta: float):
    """Half-plane collapse onto the axis of `per`.

    Chart: flat coordinates (x, y) on the attached half-plane/half-cylinder,
    arclength x, deck x -> x + translation_length(per).  The model
    (x, y) -> (0, 0, e^{x - c y}) with c = tan(theta) is conjugated onto the
    axis; energy density is 1 + c^2 and the image lies on the axis exactly.
    """
    if abs(abs(theta) - 0.5 * math.pi) < 1e-12:
        raise ValueError("collapse direction degenerates at |theta| = pi/2")
    m, ell, _ = align_loxodromic(per)
    c = math.tan(theta)

    def f(z):
        z = np.asarray(z, dtype=complex)
        h = np.exp(z.real - c * z.imag)
        pts = np.stack([np.zeros(z.shape), np.zeros(z.shape), h], axis=-1)
        return m.apply_h3(pts)

    return f, m, c


def energy_density_fd(fmap, z, lam2, h=1e-5):
    """Finite-difference energy density of an analytic chart map."""
    z = np.asarray(z, dtype=complex)
    ux = (fmap(z + h) - fmap(z - h)) / (2 * h)
    uy = (fmap(z + 1j * h) - fmap(z - 1j * h)) / (2 * h)
    at = fmap(z)
    lam2 = np.broadcast_to(np.asarray(lam2, dtype=float), z.shape)
    return (np.sum(ux**2, -1) + np.sum(uy**2, -1)) / (at[..., 2] ** 2 * lam2)


# ---------------------------------------------------------------------------
# pleating and crown ramps


def pleat_maps(dev, arguments) -> list[MobiusMap]:
    """Per-triangle bending isometries along the dual tree.

    Crossing a tree edge composes with the elliptic rotation about the image
    of the shared geodesic by that edge's bend angle.
    """
    ct = dev.tri
    out: list[MobiusMap | None] = [None] * ct.F
    out[0] = MobiusMap.identity()
    queue = [0]
    while queue:
        t = queue.pop(0)
        for i in range(3):
            s2 = ct.glue.get((t, i))
            if s2 is None or (t, i) not in ct.tree_sides or out[s2[0]] is not None:
                continue
            e = ct.edge_of_side[(t, i)]
            p = dev.placed((t, i))
            q = dev.placed((t, (i + 1) % 3))
            rot = elliptic_about_axis(Geodesic(p, q), float(arguments[e]))
            out[s2[0]] = out[t] @ rot
            queue.append(s2[0])
    return out


# ---------------------------------------------------------------------------
# assembled initial maps on fixture meshes


def identity_embedding(mesh: EquivariantMesh) -> MapState:
    """u0 = (x, 0, y) on hyperbolic chart-0 vertices (the Fuchsian premap)."""
    z = mesh.pos
    pts = np.stack([z.real, np.zeros(mesh.n_vertices), z.imag], axis=-1)
    return MapState(pts)


def crowned_initial_map(mesh: EquivariantMesh, info: dict, theta: float = 0.0) -> MapState:
    """Identity on the core, collapse onto the boundary geodesic on the strip.

    The strip chart is (s, h) with s = -log(y) along the vertical boundary
    geodesic x = x_b; the collapse sends (s, h) to the geodesic point at
    arclength parameter s (twisted by tan(theta) h when theta != 0).
    """
    x_b = info["boundary_x"]
    c = math.tan(theta)
    pts = np.empty((mesh.n_vertices, 3))
    core = mesh.chart == 0
    z = mesh.pos[core]
    pts[core] = np.stack([z.real, np.zeros(z.shape), z.imag], axis=-1)
    strip = mesh.chart == 1
    zs = mesh.pos[strip]
    y = np.exp(-(zs.real - c * zs.imag))
    pts[strip] = np.stack([np.full(zs.shape, x_b), np.zeros(zs.shape), y], axis=-1)
    return MapState(pts)


def perturb_state(
    state: MapState, mesh: EquivariantMesh, magnitude: float, seed: int = 0
) -> MapState:
    """Move free vertices by <= magnitude in dist_h3, smoothly and seeded."""
    rng = np.random.default_rng(seed)
    new = state.points.copy()
    sel = mesh.free
    z = mesh.pos[sel]
    phases = rng.uniform(0, 2 * math.pi, 3)
    freqs = rng.uniform(0.5, 1.5, (3, 2))
    bump = np.stack(
        [
            np.sin(freqs[k, 0] * z.real + freqs[k, 1] * np.log(np.abs(z.imag) + 1) + phases[k])
            for k in range(3)
        ],
        axis=-1,
    )
    norms = np.linalg.norm(bump, axis=1)
    bump *= (magnitude / np.maximum(norms, 1e-12))[:, None]
    vec = bump * state.points[sel, 2][:, None]  # ambient scaling: |v|_h = magnitude
    new[sel] = exp_h3(state.points[sel], vec)
    return MapState(new, state.t)


def fuchsian_premap(
    mesh: EquivariantMesh,
    seed_state: MapState,
    cfg: FlowConfig | None = None,
) -> tuple[MapState, float, dict]:
    """Flow constrained to the plane {x2 = 0}; returns (premap, quality, diag).

    The plane is totally geodesic, so zeroing the normal component is exact
    projection; quality is the final sup|tau|.
    """
    cfg = cfg or FlowConfig(tol_tau=1e-6, t_max=50.0)
    state = seed_state.copy()
    state.points[:, 1] = 0.0

    from .flow import step, tension_sup

    dt = min(mesh.cfl_dt(cfg.cfl), cfg.dt_cap)
    k, quality = 0, tension_sup(state, mesh)
    while quality > cfg.tol_tau and state.t < cfg.t_max and k < cfg.max_steps:
        state = step(state, mesh, min(dt, cfg.t_max - state.t), cfg)
        state.points[:, 1] = 0.0
        quality = tension_sup(state, mesh)
        k += 1
    return state, quality, {"steps": k, "t": state.t}


def blend_states(a: MapState, b: MapState, weight: np.ndarray) -> MapState:
    """Geodesic blend exp_a(w log_a(b)) with per-vertex weights."""
    v = log_h3(a.points, b.points)
    return MapState(exp_h3(a.points, weight[:, None] * v), a.t)


def collar_blend_initial_map(
    mesh: EquivariantMesh, base: MapState, alt: MapState, band: tuple[float, float]
) -> MapState:
    """Blend `base` into `alt` over a chart-height collar (for the
    uniqueness probe's 'different collars')."""
    y = mesh.pos.imag
    lo, hi = band
    w = ramp_c2((y - lo) / max(hi - lo, 1e-12))
    w[mesh.chart != 0] = 1.0
    out = blend_states(base, alt, w)
    out.points[mesh.dirichlet] = base.points[mesh.dirichlet]
    return out


# ---------------------------------------------------------------------------
# tension audit


def tension_audit(state: MapState, mesh: EquivariantMesh, info: dict | None = None) -> dict:
    """Region-wise sup|tau| and the crown-strip decay fit."""
    tau = tension_field(state, mesh)
    norms = np.linalg.norm(tau, axis=1) / state.points[:, 2]
    report: dict = {"h_mesh": mesh.h_mesh}
    for region in np.unique(mesh.region):
        sel = (mesh.region == region) & mesh.free
        if np.any(sel):
            report[f"sup_tau_{region}"] = float(norms[sel].max())
    if info is not None and "strip_ids" in info:
        ids = info["strip_ids"]
        hvals = info["strip_h"]
        sup_h = []
        for k in range(1, ids.shape[0] - 1):
            row = np.array([int(v) for v in ids[k]])
            sel = mesh.free[row]
            if np.any(sel):
                sup_h.append((hvals[k], float(norms[row][sel].max())))
        xs = np.array([h for h, _ in sup_h])
        vals = np.array([v for _, v in sup_h])
        # discretization floor: the deepest third of the strip
        floor = float(np.median(vals[-max(len(vals) // 3, 1):]))
        report["strip_floor"] = floor
        keep = vals > 3.0 * max(floor, 1e-14)
        if keep.sum() >= 3:
            slope, icpt = np.polyfit(xs[keep], np.log(vals[keep]), 1)
            resid = np.log(vals[keep]) - (slope * xs[keep] + icpt)
            ss_tot = np.sum((np.log(vals[keep]) - np.log(vals[keep]).mean()) ** 2)
            r2 = 1.0 - np.sum(resid**2) / max(ss_tot, 1e-300)
            report["crown_decay_slope"] = float(slope)
            report["crown_decay_r2"] = float(r2)
            report["crown_at_floor"] = False
        else:
            # tension already at the discretization floor everywhere
            report["crown_decay_slope"] = float("-inf")
            report["crown_decay_r2"] = 1.0
            report["crown_at_floor"] = True
    return report


# ---------------------------------------------------------------------------
# bent fixtures: pleated core plus chain collapse on the grafted strip


def pleated_state(mesh: EquivariantMesh, dev, arguments) -> MapState:
    """Pleated plane: per-triangle bending isometries applied to the identity.

    The fundamental region of the fixture developments is split by vertical
    tree-edge geodesics, so membership is an x-interval lookup.
    """
    ct = dev.tri
    bends = pleat_maps(dev, arguments)
    spans = []
    for tt in range(ct.F):
        xs = [
            dev.placed((tt, c)).value.real
            for c in range(3)
            if not dev.placed((tt, c)).is_infinity
        ]
        spans.append((min(xs), max(xs), len(xs) == 2))

    def triangle_of(x: float) -> int:
        # triangles with an infinite corner are genuine vertical strips and win
        best = 0
        for tt, (lo, hi, strip_like) in enumerate(spans):
            if lo - 1e-12 <= x <= hi + 1e-12:
                best = tt
                if strip_like:
                    return tt
        return best

    z = mesh.pos
    pts = np.empty((mesh.n_vertices, 3))
    core = mesh.chart == 0
    tri_idx = np.array([triangle_of(x) for x in z[core].real])
    base = np.stack([z[core].real, np.zeros(core.sum()), z[core].imag], axis=-1)
    for tt in range(ct.F):
        sel = tri_idx == tt
        if np.any(sel):
            pts_core = bends[tt].apply_h3(base[sel])
            idx = np.nonzero(core)[0][sel]
            pts[idx] = pts_core
    return MapState(pts)


def bent_crowned_initial_map(
    mesh: EquivariantMesh, info: dict, arguments
) -> MapState:
    """Pleated core plus collapse onto the bent chain geodesic on the strip.

    The boundary geodesic of the pleated plane is the bent chain geodesic, so
    the strip rows copy the core boundary values (constant in h).
    """
    st = pleated_state(mesh, info["dev"], arguments)
    ids = info["strip_ids"]
    for k in range(1, ids.shape[0]):
        for j in range(ids.shape[1]):
            st.points[int(ids[k, j])] = st.points[int(ids[0, j])]
    return st


def crown_strip_rotation(
    state: MapState,
    mesh: EquivariantMesh,
    info: dict,
    axis_geodesic,
    theta0: float,
    band: tuple[float, float],
) -> MapState:
    """Rotate strip values by a C^2 ramp of the angle across an h-band.

    This is the half-strip interpolation piece of the crown construction: the
    ramp is 0 below the band and theta0 above it, with vanishing first and
    second derivatives at both ends.
    """
    out = state.copy()
    strip = np.nonzero(mesh.chart == 1)[0]
    h = mesh.pos[strip].imag
    lo, hi = band
    w = ramp_c2((h - lo) / max(hi - lo, 1e-12))
    for angle in np.unique(np.round(w * theta0, 14)):
        if abs(angle) < 1e-15:
            continue
        rot = elliptic_about_axis(axis_geodesic, float(angle))
        sel = strip[np.round(w * theta0, 14) == angle]
        out.points[sel] = rot.apply_h3(state.points[sel])
    return out
