"""Command line interface: check, build-rep, make-metric, init-map, flow,
report, interp-demo, validate.

Exit codes: 0 ok, 2 validation failure, 3 non-convergence, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .config import ConfigError, load_config


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crownflow")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, required=True)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--refine", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--plots", choices=("on", "off"), default="off")

    for name in ("check", "build-rep", "make-metric", "init-map", "flow"):
        common(sub.add_parser(name))

    rp = sub.add_parser("report")
    rp.add_argument("run_dir", type=Path)

    ip = sub.add_parser("interp-demo")
    ip.add_argument("--n", type=int, default=1)
    ip.add_argument("--eps", type=float, default=0.1)
    ip.add_argument("--out", type=Path, default=Path("out"))
    ip.add_argument("--plots", choices=("on", "off"), default="off")

    vp = sub.add_parser("validate")
    vp.add_argument("--seed", type=int, default=0)
    return p


def _load(args):
    cfg = load_config(args.config)
    if args.refine is not None:
        cfg.flow["refine"] = args.refine
    if args.seed is not None:
        cfg.flow["seed"] = args.seed
    return cfg


def cmd_check(args) -> int:
    cfg = _load(args)
    report = pipeline.run_check(cfg)
    pipeline.write_json(args.out / "check.json", report)
    for v in report["violations"]:
        print(f"violation: {v}")
    for w in report["warnings"]:
        print(f"warning: {w}")
    print("check:", "ok" if report["ok"] else "failed")
    return 0 if report["ok"] else 2


def cmd_build_rep(args) -> int:
    cfg = _load(args)
    report = pipeline.run_check(cfg)
    if not report["ok"]:
        print("validation failed; run `check` for details")
        return 2
    dev, rep = pipeline.build_rep(cfg)
    pipeline.write_json(args.out / "representation.json", pipeline.rep_summary(rep))
    print(f"holonomy built: {len(rep.generators)} generators, "
          f"consistency residual {rep.relator_residual:.3e}")
    return 0


def cmd_make_metric(args) -> int:
    cfg = _load(args)
    from .metrics import max_feasible_eps, pole_interp_profile

    eps = float(cfg.metric.get("pole_eps", 0.0)) or min(0.01, max_feasible_eps() / 2)
    prof = pole_interp_profile(eps)
    pipeline.write_profile_csv(args.out / "pole_profile.csv", prof)
    pipeline.write_json(
        args.out / "metric.json",
        {"pole_eps": eps, "window": list(prof.window),
         "y_trunc": cfg.metric.get("y_trunc", 3.0)},
    )
    print(f"pole interpolation profile built at eps={eps}")
    return 0


def cmd_init_map(args) -> int:
    cfg = _load(args)
    mesh, info = pipeline.build_mesh(cfg)
    state = pipeline.build_initial_map(cfg, mesh, info)
    from .initmap import tension_audit

    audit = tension_audit(state, mesh, info)
    pipeline.write_snapshot(args.out / "u0.csv", state, mesh)
    pipeline.write_json(args.out / "tension_audit.json", audit)
    print(f"initial map on {mesh.n_vertices} vertices, h_mesh={mesh.h_mesh:.4f}")
    return 0


def cmd_flow(args) -> int:
    cfg = _load(args)
    report = pipeline.run_check(cfg)
    pipeline.write_json(args.out / "check.json", report)
    if not report["ok"]:
        print("validation failed; aborting")
        return 2
    mesh, info = pipeline.build_mesh(cfg)
    state0 = pipeline.build_initial_map(cfg, mesh, info)
    fcfg = pipeline.flow_config(cfg)

    premap = None
    if info.get("kind") == "crowned_torus":
        from .initmap import fuchsian_premap

        premap, quality, _ = fuchsian_premap(mesh, state0, fcfg)
        state0 = premap

    from .flow import flow as run_flow

    snapdir = args.out / "snapshots"
    counter = {"k": 0}

    def snap(state, mesh_):
        pipeline.write_snapshot(snapdir / f"{counter['k']:05d}.csv", state, mesh_)
        counter["k"] += 1

    out_cadence = int(cfg.output.get("cadence", 0))
    state, diag = run_flow(
        state0, mesh, fcfg, snapshot_cb=snap if out_cadence else None
    )
    summary = pipeline.final_report(state, mesh, info, cfg, diag, premap)
    pipeline.write_diagnostics(args.out / "diagnostics.csv", diag)
    pipeline.write_json(args.out / "summary.json", summary)
    pipeline.write_snapshot(args.out / "final_state.csv", state, mesh)
    if args.plots == "on" or cfg.output.get("plots") == "on":
        from .flow import energy_density, tension_field

        e = energy_density(state, mesh)
        tau = tension_field(state, mesh)
        tn = np.linalg.norm(tau, axis=1) / state.points[:, 2]
        pipeline.write_heatmap_svg(args.out / "energy.svg", mesh, e, "energy density")
        pipeline.write_heatmap_svg(args.out / "tension.svg", mesh, tn, "tension norm")
    print(f"flow: converged={diag.converged} final sup|tau|={diag.sup_tau[-1]:.3e}")
    return 0 if diag.converged else 3


def cmd_report(args) -> int:
    path = args.run_dir / "summary.json"
    if not path.exists():
        print(f"no summary found at {path}")
        return 2
    with open(path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0 if summary.get("converged") else 3


def cmd_interp_demo(args) -> int:
    from .metrics import pole_interp_profile, zero_interp_verify

    prof = pole_interp_profile(args.eps if args.eps < 0.1 else 0.01)
    pipeline.write_profile_csv(
        args.out / "interp_demo.csv", prof, n=args.n, eps=args.eps
    )
    rep = zero_interp_verify(args.n, args.eps)
    pipeline.write_json(
        args.out / "interp_demo.json",
        {
            "zero_ok": rep.ok,
            "system_residual": rep.system_residual,
            "min_p": rep.min_p,
            "closed_form_min": rep.closed_form_min,
            "max_curvature": rep.max_curvature,
        },
    )
    if args.plots == "on":
        import matplotlib

        matplotlib.use("svg")
        import matplotlib.pyplot as plt

        matplotlib.rcParams["svg.hashsalt"] = "crownflow"
        from .metrics import curvature_of_profile

        cur = curvature_of_profile(prof)
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        axes[0].semilogx(prof.r, prof.u)
        axes[0].set_title("conformal exponent u(r)")
        axes[1].semilogx(prof.r, cur["K"])
        axes[1].set_title("curvature K(r)")
        (args.out).mkdir(parents=True, exist_ok=True)
        fig.savefig(args.out / "interp_demo.svg", metadata={"Date": None})
        plt.close(fig)
    print("interp-demo written")
    return 0


def cmd_validate(args) -> int:
    """Quick invariant battery over the library (no pytest needed)."""
    import math

    from .halfspace import MobiusMap, dist_h3, exp_h3, log_h3
    from .metrics import pole_interp_profile, zero_interp_verify
    from .surfaces import develop, fg_from_rep, holonomy, once_punctured_torus

    rng = np.random.default_rng(args.seed)
    failures = []

    x = rng.standard_normal((256, 3))
    x[:, 2] = np.exp(x[:, 2])
    y = rng.standard_normal((256, 3))
    y[:, 2] = np.exp(y[:, 2])
    err = np.abs(exp_h3(x, log_h3(x, y)) - y).max()
    (failures.append(f"exp/log round trip: {err:.2e}") if err > 1e-10 else None)

    m = MobiusMap(1 + 1j, 0.3, -0.2j, 0.8)
    d0 = dist_h3(x, y)
    d1 = dist_h3(m.apply_h3(x), m.apply_h3(y))
    err = np.abs(d0 - d1).max()
    (failures.append(f"isometry: {err:.2e}") if err > 1e-10 else None)

    ct = once_punctured_torus().compiled()
    z = np.exp(rng.uniform(-0.5, 0.5, 3)) * np.exp(1j * rng.uniform(-2, 2, 3))
    rep = holonomy(develop(ct, z))
    err = np.abs(fg_from_rep(rep) - z).max()
    (failures.append(f"coordinate round trip: {err:.2e}") if err > 1e-9 else None)

    r = zero_interp_verify(2, 0.1)
    (failures.append("zero interpolation audit") if not r.ok else None)
    prof = pole_interp_profile(0.01, samples=512)
    err = abs(prof.u_of(2.0 / 3.0) - (-0.5 * math.log(2.0 / 3.0)))
    (failures.append(f"pole interpolation endpoint: {err:.2e}") if err > 1e-8 else None)

    for f in failures:
        print("FAIL:", f)
    print("validate:", "ok" if not failures else f"{len(failures)} failures")
    return 0 if not failures else 2


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "check": cmd_check,
        "build-rep": cmd_build_rep,
        "make-metric": cmd_make_metric,
        "init-map": cmd_init_map,
        "flow": cmd_flow,
        "report": cmd_report,
        "interp-demo": cmd_interp_demo,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}")
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
