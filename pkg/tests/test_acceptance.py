"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  The two flow regressions (criteria 7 and 10) dominate the runtime;
both stay inside their stated budgets on a single core.
"""

import math
import time

import numpy as np
import pytest

from crownflow.domains import crowned_torus_mesh, punctured_torus_mesh
from crownflow.flow import (
    FlowConfig,
    MapState,
    core_energy,
    flow,
    monitors,
    tension_field,
)
from crownflow.halfspace import Geodesic, Horoball, MobiusMap, bp, dist_h3
from crownflow.initmap import (
    collapse_map,
    collar_blend_initial_map,
    crowned_initial_map,
    energy_density_fd,
    fuchsian_premap,
    horodisk_map,
    identity_embedding,
    perturb_state,
)
from crownflow.meshes import flat_torus_mesh, rect_chart_mesh
from crownflow.metrics import (
    R_JOIN,
    cusp_u,
    curvature_of_profile,
    flat_u,
    pole_interp_profile,
    zero_interp_coeffs,
    zero_interp_verify,
)
from crownflow.quaddiff import (
    ChainSpec,
    PrincipalPart,
    compatible_with_chain,
    default_horoballs,
    fit_principal_part,
    hopf_from_grid,
    metric_residue_chain,
    straighten_chain,
    truncated_lengths,
)
from crownflow.surfaces import (
    develop,
    fg_from_rep,
    holonomy,
    once_punctured_torus,
    one_boundary_torus,
)

RESULTS = []


def record(criterion: int, name: str, passed: bool, detail: str = ""):
    line = f"criterion {criterion:2d} [{'PASS' if passed else 'FAIL'}] {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    RESULTS.append((criterion, passed))
    assert passed, line


# -- shared fixtures (module scope keeps the expensive flows single-run) ----


@pytest.fixture(scope="module")
def fuchsian_run():
    mesh = punctured_torus_mesh(refine=2, y_trunc=3.0)
    ident = identity_embedding(mesh)
    start = perturb_state(ident, mesh, 0.3, seed=5)
    cfg = FlowConfig(cfl=0.1, tol_tau=1e-5, t_max=200.0, cadence=1)
    t0 = time.time()
    state, diag = flow(start, mesh, cfg)
    wall = time.time() - t0
    return mesh, ident, state, diag, wall


@pytest.fixture(scope="module")
def divergent_run():
    mesh = flat_torus_mesh(12, 12, MobiusMap.translation(1.0), MobiusMap.identity())
    x = mesh.pos.real
    t0 = 1.0
    pts = np.stack([x, np.zeros_like(x), np.full_like(x, t0)], axis=-1)
    cfg = FlowConfig(cfl=0.2, tol_tau=0.0, t_max=4.0, cadence=20)
    state, diag = flow(MapState(pts), mesh, cfg)
    return mesh, t0, state, diag


@pytest.fixture(scope="module")
def crowned_run():
    mesh, info = crowned_torus_mesh([1, 1, 1, 1], refine=2, y_trunc=3.0, r_trunc=8.0)
    u0 = crowned_initial_map(mesh, info)
    cfg = FlowConfig(cfl=0.1, tol_tau=1e-5, t_max=300.0)
    t0 = time.time()
    state, quality, meta = fuchsian_premap(mesh, u0, cfg)
    wall = time.time() - t0
    return mesh, info, state, quality, wall


# -- criteria ----------------------------------------------------------------


def test_criterion_1_zero_interpolation_closed_forms():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst_res, worst_p, worst_closed = 0.0, 0.0, math.inf
    for _ in range(20):
        n = int(rng.integers(1, 5))
        eps = float(rng.uniform(0.01, 0.2))
        rep = zero_interp_verify(n, eps)
        worst_res = max(worst_res, rep.system_residual)
        worst_p = min(worst_p, rep.min_p)
        worst_closed = min(worst_closed, rep.closed_form_min)
    elapsed = time.time() - t0
    record(
        1,
        "zero-cap matching system and positivity",
        worst_res < 1e-12 and worst_p >= -1e-12 and worst_closed >= 0 and elapsed < 1.0,
        f"residual {worst_res:.2e}, min p {worst_p:.2e}, {elapsed:.2f}s",
    )


def test_criterion_2_pole_interpolation():
    t0 = time.time()
    eps = 0.01
    prof = pole_interp_profile(eps, samples=2048)
    lr = math.log(eps)
    f2 = (lr * lr + lr + 1.0) / (eps * eps * lr * lr)
    match = max(
        abs(prof.u_of(eps) - float(cusp_u(eps))),
        abs(prof.du_of(eps) - (-1 / eps - 1 / (eps * lr))),
        abs(prof.d2u_of(eps) - f2) / abs(f2),
        abs(prof.u_of(R_JOIN) - float(flat_u(R_JOIN))),
        abs(prof.du_of(R_JOIN) + 0.5 / R_JOIN),
        abs(prof.d2u_of(R_JOIN) - 0.5 / R_JOIN**2),
    )
    ks = np.array([prof.du_of(x) * x for x in prof.r])
    monotone = float(np.diff(ks).min())
    cur = curvature_of_profile(prof)
    seg = cur["by_segment"]
    k_interp = float(seg["interpolation"].max())
    k_cusp = float(np.abs(seg["cusp"] + 1.0).max())
    elapsed = time.time() - t0
    record(
        2,
        "cusp-to-flat profile: C2 match, monotone k, curvature signs",
        match < 1e-8
        and monotone >= -1e-12
        and k_interp <= 1e-8
        and k_cusp < 1e-8
        and elapsed < 1.0,
        f"match {match:.2e}, K_interp {k_interp:.2e}, {elapsed:.2f}s",
    )


def test_criterion_3_energy_density_constants():
    rng = np.random.default_rng(3)
    per_par = MobiusMap(1, 1, 0, 1)
    conj = MobiusMap(1.3 + 0.2j, 0.4, -0.1j, 1.0)
    f1, _ = horodisk_map(conj @ per_par @ conj.inverse())
    z = rng.uniform(-2, 2, 100) + 1j * rng.uniform(0.5, 4.0, 100)
    e1 = energy_density_fd(f1, z, 1.0 / z.imag**2)
    err1 = float(np.abs(e1 - 2.0).max())
    ok = err1 < 1e-6
    errs = [err1]
    lox = conj @ MobiusMap(2.0, 0, 0, 0.5) @ conj.inverse()
    for c in (0.0, 1.0, 2.0):
        g, _, _ = collapse_map(lox, math.atan(c))
        z = rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100)
        e2 = energy_density_fd(g, z, 1.0)
        err = float(np.abs(e2 - (1 + c * c)).max())
        errs.append(err)
        ok = ok and err < 1e-6
    record(3, "horodisk e=2 and collapse e=1+c^2 by finite differences", ok,
           f"max errors {['%.1e' % e for e in errs]}")


def test_criterion_4_fg_round_trip():
    rng = np.random.default_rng(4)
    worst, worst_rel = 0.0, 0.0
    for tri in (once_punctured_torus(), one_boundary_torus()):
        ct = tri.compiled()
        for _ in range(50):
            z = np.exp(rng.uniform(-0.7, 0.7, ct.n_edges)) * np.exp(
                1j * rng.uniform(-math.pi, math.pi, ct.n_edges)
            )
            rep = holonomy(develop(ct, z))
            worst_rel = max(worst_rel, rep.relator_residual)
            worst = max(worst, float(np.abs(fg_from_rep(rep) - z).max()))
    record(4, "develop/holonomy/coordinates round trip on 100 tuples",
           worst < 1e-9 and worst_rel < 1e-9,
           f"coord err {worst:.2e}, consistency {worst_rel:.2e}")


def test_criterion_5_trace_identity():
    rng = np.random.default_rng(5)
    alpha = MobiusMap(1, 1, 0, 1)
    worst = 0.0
    for _ in range(50):
        m = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        if abs(m[0] * m[3] - m[1] * m[2]) < 1e-2:
            continue
        delta = MobiusMap(*m)
        word = delta
        for n in range(1, 11):
            word = alpha @ word
            expect = (delta.a + delta.d + n * delta.c) ** 2
            worst = max(worst, abs(word.tr2() - expect) / max(1.0, abs(expect)))
    record(5, "trace-squared identity for parabolic powers", worst < 1e-10,
           f"max residual {worst:.2e}")


def test_criterion_6_tension_gradient_oracle():
    t0 = time.time()

    def state_on(mesh):
        zz = mesh.pos
        return MapState(
            np.stack(
                [
                    0.3 * np.sin(2 * zz.real) + 0.1 * zz.imag,
                    0.2 * np.cos(zz.real + zz.imag),
                    np.exp(0.2 * np.sin(3 * zz.real) + 0.1 * np.cos(2 * zz.imag)),
                ],
                axis=-1,
            )
        )

    errs = []
    for n in (8, 16, 32):
        mesh = rect_chart_mesh(n, n, 0, 1, 0, 1, lambda z: 1 + 0.3 * z.real)
        st = state_on(mesh)
        tau = tension_field(st, mesh)
        v = int(mesh.meta["grid_ids"][n // 2, n // 2])
        worst = 0.0
        for k in range(3):
            eps = 1e-6 * max(1.0, abs(st.points[v, k]))
            up, dn = st.points.copy(), st.points.copy()
            up[v, k] += eps
            dn[v, k] -= eps
            fd = (
                core_energy(MapState(up), mesh) - core_energy(MapState(dn), mesh)
            ) / (2 * eps)
            expected = -tau[v, k] * mesh.mass[v] / st.points[v, 2] ** 2
            worst = max(worst, abs(fd - expected) / max(abs(expected), 1e-12))
        errs.append(worst)
    rate = float(np.mean(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    elapsed = time.time() - t0
    record(6, "tension matches the discrete energy gradient under refinement",
           errs[-1] < errs[0] and rate >= 1.0 and elapsed < 60.0,
           f"errors {['%.1e' % e for e in errs]}, fitted order {rate:.2f}, {elapsed:.1f}s")


def test_criterion_7_fuchsian_flow_regression(fuchsian_run):
    mesh, ident, state, diag, wall = fuchsian_run
    dist = float(np.max(dist_h3(state.points[mesh.free], ident.points[mesh.free])))
    reps = {r.name: r for r in monitors(diag)}
    ok = (
        diag.converged
        and diag.sup_tau[-1] < 1e-5
        and dist < 10 * mesh.h_mesh
        and reps["energy_monotone"].passed
        and wall < 300.0
    )
    record(7, "perturbed Fuchsian torus returns to the identity embedding", ok,
           f"dist {dist:.4f} vs 10h {10*mesh.h_mesh:.3f}, "
           f"sup|tau| {diag.sup_tau[-1]:.1e}, {wall:.0f}s")


def test_criterion_8_divergent_fixture(divergent_run):
    mesh, t0, state, diag = divergent_run
    x = mesh.pos.real
    h = math.sqrt(2 * state.t + t0**2)
    exact = np.stack([x, np.zeros_like(x), np.full_like(x, h)], axis=-1)
    err = float(np.max(dist_h3(state.points, exact)))
    dt = mesh.cfl_dt(0.2)
    budget = 10 * (dt + mesh.h_mesh**2)
    reps = {r.name: r for r in monitors(diag)}
    ok = (
        err < budget
        and not diag.converged
        and not reps["sup_drift_bounded"].passed
        and reps["energy_monotone"].passed
    )
    record(8, "nonconvergent closed form tracked and flagged", ok,
           f"pointwise err {err:.2e} < {budget:.2e}, drift flagged "
           f"{not reps['sup_drift_bounded'].passed}")


def test_criterion_9_equivariance(fuchsian_run, divergent_run):
    _, _, _, diag_f, _ = fuchsian_run
    _, _, _, diag_d = divergent_run
    worst = max(max(diag_f.equivariance), max(diag_d.equivariance))
    record(9, "equivariance residual at every snapshot", worst < 1e-10,
           f"max residual {worst:.2e}")


def test_criterion_10_principal_part_recovery(crowned_run):
    mesh, info, state, quality, wall = crowned_run
    alpha1 = 0.8
    ids, sv, hv = info["strip_ids"], info["strip_s"], info["strip_h"]
    Z = sv[None, :] + 1j * hv[:, None]
    idx = np.array([[int(v) for v in row] for row in ids])
    zz, phi = hopf_from_grid(Z, state.points[idx])
    band = (zz.imag > hv[-1] / 3) & (zz.imag < 2 * hv[-1] / 3)
    w = (16.0 * alpha1**2) / zz[band] ** 2
    phw = phi[band] * (-2.0 * alpha1 * w ** (-1.5)) ** 2
    fit = fit_principal_part(w.ravel(), phw.ravel(), 3, n_smooth=2)
    a_hat = fit.part.coeffs[0]
    rel = min(abs(a_hat - alpha1), abs(a_hat + alpha1)) / alpha1

    # compatibility predicates agree with the definition's decisions exactly
    from crownflow.quaddiff import chain_from_framing

    chain = chain_from_framing(info["rep"], 0)
    pred_ok = (
        compatible_with_chain(PrincipalPart(3, (alpha1 + 0j,)), chain) is True
        and compatible_with_chain(PrincipalPart(5, (1 + 0j, 0.2 + 0j)), chain) is False
    )
    alpha = metric_residue_chain(_symmetric_two_chain())
    pred_ok = pred_ok and compatible_with_chain(
        PrincipalPart(4, (1.0 + 0j, alpha + 0.5j)), _symmetric_two_chain()
    )
    pred_ok = pred_ok and not compatible_with_chain(
        PrincipalPart(4, (1.0 + 0j, alpha + 1.0 + 0j)), _symmetric_two_chain()
    )
    ok = quality < 1e-5 and rel < 0.05 and pred_ok
    record(10, "order-3 crown pole coefficient recovered from Hopf(u_inf)", ok,
           f"rel err {rel:.2%}, premap quality {quality:.1e}, {wall:.0f}s")


def _symmetric_two_chain():
    lam = math.exp(1.1)
    return ChainSpec(MobiusMap(lam, 0, 0, 1 / lam), (bp(1.0), bp(2.0)))


def test_criterion_11_uniqueness_probe():
    mesh = punctured_torus_mesh(refine=1, y_trunc=3.0)
    ident = identity_embedding(mesh)
    alt = perturb_state(ident, mesh, 0.25, seed=11)
    u0a = collar_blend_initial_map(mesh, ident, alt, (0.4, 1.0))
    u0b = collar_blend_initial_map(mesh, ident, alt, (0.8, 2.2))
    cfg = FlowConfig(cfl=0.1, tol_tau=1e-5, t_max=200.0, cadence=100)
    sa, da = flow(u0a, mesh, cfg)
    sb, db = flow(u0b, mesh, cfg)
    gap = float(np.max(dist_h3(sa.points[mesh.free], sb.points[mesh.free])))
    ok = da.converged and db.converged and gap < 10 * mesh.h_mesh
    record(11, "two admissible initial maps converge to the same state", ok,
           f"gap {gap:.2e} vs 10h {10*mesh.h_mesh:.3f}")


def test_criterion_12_chain_invariants():
    rng = np.random.default_rng(12)
    lam = math.exp(1.3)
    chain = ChainSpec(
        MobiusMap(lam, 0, 0, 1 / lam), (bp(0.5), bp(1.0), bp(2.0), bp(4.0))
    )
    base = metric_residue_chain(chain, default_horoballs(chain, [1, 0.4, 0.7, 0.9]))
    drift = 0.0
    for _ in range(10):
        lv = list(np.exp(rng.uniform(-1, 1, 4)))
        drift = max(
            drift, abs(metric_residue_chain(chain, default_horoballs(chain, lv)) - base)
        )

    bent = _bent_test_chain()
    balls = default_horoballs(bent, [0.5, 0.8])
    a0 = metric_residue_chain(bent, balls)
    s, sballs = straighten_chain(bent, balls)
    a1 = metric_residue_chain(s, sballs)
    straighten_err = min(abs(a1 - a0), abs(a1 + a0))

    sym = _symmetric_two_chain()
    a_sym = metric_residue_chain(sym, default_horoballs(sym, [0.5, 0.5]))
    ls = truncated_lengths(sym, default_horoballs(sym, [0.5, 0.5]))
    sym_zero = abs(a_sym) - abs(ls[0] - ls[1])

    ok = drift < 1e-10 and straighten_err < 1e-9 and abs(sym_zero) < 1e-10
    record(12, "metric residue: horoball independence, straightening, symmetry",
           ok, f"drift {drift:.1e}, straighten {straighten_err:.1e}")


def _bent_test_chain():
    from crownflow.halfspace import elliptic_about_axis

    lam = math.exp(1.2)
    base = ChainSpec(MobiusMap(lam, 0, 0, 1 / lam), (bp(1.0), bp(2.5)))
    rot = elliptic_about_axis(Geodesic(base.point(1), base.point(2)), 0.8)
    return ChainSpec(
        rot @ base.deck @ rot.inverse(),
        (rot.apply(base.point(0)), rot.apply(base.point(1))),
    )


def test_criterion_12_symmetric_chain_exactly_zero():
    # equally-spaced orbit with geometrically scaled horoballs: the scaling
    # isometry shifts the decorated chain by one, so l1 = l2 exactly
    q = math.exp(0.9)
    deck = MobiusMap(q, 0, 0, 1 / q)  # translation length 2 ln q
    chain = ChainSpec(deck, (bp(1.0), bp(q)))
    balls = default_horoballs(chain, [0.4, 0.4 * q])
    alpha = metric_residue_chain(chain, balls)
    record(12, "geometrically symmetric 2-chain has zero residue",
           abs(alpha) < 1e-10, f"|alpha| = {abs(alpha):.2e}")


def test_zz_summary():
    n_pass = sum(1 for _, ok in RESULTS if ok)
    print(f"\nacceptance: {n_pass}/{len(RESULTS)} checks passed")
    assert all(ok for _, ok in RESULTS)
