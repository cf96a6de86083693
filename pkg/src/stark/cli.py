"""Command-line entry point.

Subcommands: check, canon, flow, construct, helix, verify.
Exit codes: 0 success, 1 property-check failure, 2 input error,
3 region or step failure.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import austere, canonform, helix, starkflow, surface
from .errors import (
    BZero,
    DimensionMismatch,
    MuZero,
    NonUnitaryDrift,
    NotStark,
    OutsideCanonicalPatch,
    OutsideValidRegion,
    ParseError,
    StarkError,
    StepUnderflow,
    ToleranceBreach,
    UDegenerate,
)

log = logging.getLogger("stark")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_REGION = 0, 1, 2, 3

DEFAULTS = {
    "c0": None,
    "d0": None,
    "v0": None,
    "beta0": 1.0,
    "mu0": 1.0,
    "kappa0": 1.0,
    "x_min": 0.0,
    "x_max": 0.01,
    "y_min": 0.0,
    "y_max": 0.01,
    "step": 1e-3,
    "s_min": 0.0,
    "s_max": 1.0,
    "s_step": 0.25,
    "tol": 1e-9,
    "ratio_tol": helix.DEFAULT_RATIO_TOL,
    "max_den": helix.DEFAULT_MAX_DEN,
    "out": None,
    "report": None,
    "frames": None,
}

FLOW_HEADER = ["x", "y", "t", "u", "v", "beta", "mu", "kappa", "C", "D", "ratio"]
POINT_HEADER = ["x", "y", "s", "z0_re", "z0_im", "z1_re", "z1_im", "z2_re", "z2_im"]
FRAME_HEADER = (
    ["x", "y"]
    + [f"F{r}{c}_{part}" for r in range(3) for c in range(3) for part in ("re", "im")]
    + ["residual"]
)


class ConfigError(StarkError):
    pass


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    """Write rows with round-trip float formatting; '-' or None is stdout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def load_config(args):
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(data) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("step", "s_step", "tol", "ratio_tol"):
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]}")
    if cfg["x_max"] < cfg["x_min"] or cfg["y_max"] < cfg["y_min"]:
        raise ConfigError("ranges must satisfy min <= max")
    if int(cfg["max_den"]) < 1:
        raise ConfigError("max_den must be >= 1")
    cfg["max_den"] = int(cfg["max_den"])
    return cfg


def seed_from_config(cfg):
    """(FirstIntegrals, v0) from either seed family."""
    cd = [cfg[k] for k in ("c0", "d0", "v0")]
    if any(v is not None for v in cd):
        if any(v is None for v in cd):
            raise ConfigError("c0, d0 and v0 must be given together")
        return starkflow.FirstIntegrals(float(cd[0]), float(cd[1])), float(cd[2])
    if cfg["beta0"] == 0:
        raise ConfigError("beta0 must be nonzero")
    fs = starkflow.FrameScalars(float(cfg["beta0"]), float(cfg["mu0"]), float(cfg["kappa0"]))
    rs = starkflow.to_reduced(fs)
    return starkflow.first_integrals(rs), rs.v


def s_samples(cfg):
    n = int(round((cfg["s_max"] - cfg["s_min"]) / cfg["s_step"]))
    return [float(s) for s in np.linspace(cfg["s_min"], cfg["s_max"], max(n, 0) + 1)]


# -- subcommands -----------------------------------------------------------


def cmd_check(args):
    rep = austere.load_rep(args.matrix)
    tol = args.tol
    wanted = args.checks.split(",") if args.checks else ["austere", "stark", "lift"]
    results = {}
    hyp = austere.hypersurface_residuals(rep)
    if "austere" in wanted:
        results["austere"] = {"pass": bool(np.all(hyp < tol)), "residual": float(hyp.max())}
    if "stark" in wanted:
        comp = austere.compat_residual(rep)
        results["stark"] = {
            "pass": bool(np.all(hyp < tol) and comp < tol),
            "residual": max(float(hyp.max()), comp),
        }
    if "lift" in wanted:
        odd = austere.lift_odd_functions(rep)
        results["lift"] = {
            "pass": bool(np.all(odd < tol)) and austere.lift_charpoly_identity_check(rep, tol),
            "residual": float(odd.max()),
        }
    unknown = set(wanted) - set(results)
    if unknown:
        raise ConfigError(f"unknown checks: {sorted(unknown)}")
    for name in wanted:
        r = results[name]
        print(f"{name}: {'true' if r['pass'] else 'false'} (residual {r['residual']:.3e})")
    if args.json:
        write_json(args.json, results)
    return EXIT_OK if all(r["pass"] for r in results.values()) else EXIT_CHECK


def cmd_canon(args):
    rep = austere.load_rep(args.matrix)
    cf = canonform.reduce_to_canonical(rep, args.tol)
    write_json(args.out, cf.to_json())
    return EXIT_OK


def cmd_flow(args):
    cfg = load_config(args)
    seed, v0 = seed_from_config(cfg)
    field = starkflow.integrate_flow(
        seed, v0, (cfg["x_min"], cfg["x_max"]), (cfg["y_min"], cfg["y_max"]), cfg["step"]
    )
    write_csv(cfg["out"], FLOW_HEADER, field.rows())
    return EXIT_OK


def _node_closures(grid, cfg):
    nx, ny = len(grid.x), len(grid.y)
    picks = sorted({(0, 0), (nx - 1, 0), (0, ny - 1), (nx - 1, ny - 1), (nx // 2, ny // 2)})
    out = []
    for i, j in picks:
        hs = helix.helix_spec(grid.scalars(i, j), cfg["max_den"], cfg["ratio_tol"])
        rec = hs.to_json()
        rec.update(x=float(grid.x[i]), y=float(grid.y[j]))
        out.append(rec)
    return out


def construct(cfg):
    """Run flow, frame transport and the helix sweep; return (grid, report)."""
    seed, v0 = seed_from_config(cfg)
    field, grid = surface.build_grid(
        seed, v0, (cfg["x_min"], cfg["x_max"]), (cfg["y_min"], cfg["y_max"]), cfg["step"]
    )
    # first integrals recomputed from (t, u, v) at every flow sample
    C = ((field.t - field.u**3) * field.v**2 - 1.0 / field.v) / 3.0
    D = field.v * (field.t + 1.0) / 3.0
    fi_drift = float(max(np.max(np.abs(C - field.C[:, None])), np.max(np.abs(D - field.D[:, None]))))
    ratio, bc = field.ratio()
    seed_ratio = starkflow.ratio_from_cd(seed.C, seed.D)
    ok = np.abs(bc) > 1e-3
    ratio_drift = float(np.max(np.abs(ratio[ok] / seed_ratio - 1.0))) if ok.any() and math.isfinite(seed_ratio) else None
    report = {
        "seed": {"C": seed.C, "D": seed.D, "v0": v0},
        "x_range": [float(grid.x[0]), float(grid.x[-1])],
        "y_range": [float(grid.y[0]), float(grid.y[-1])],
        "step": cfg["step"],
        "nodes": int(len(grid.x) * len(grid.y)),
        "max_first_integral_drift": fi_drift,
        "max_ratio_drift": ratio_drift,
        "seed_ratio": seed_ratio if math.isfinite(seed_ratio) else None,
        "max_frame_residual": grid.max_residual(),
        "closure": _node_closures(grid, cfg),
    }
    return grid, report


def cmd_construct(args):
    cfg = load_config(args)
    grid, report = construct(cfg)
    # build everything in memory first so failures leave no partial files
    samples = s_samples(cfg)
    points = list(helix.point_rows(grid, samples))
    report["points"] = len(points)
    write_csv(cfg["out"] or "points.csv", POINT_HEADER, points)
    if cfg["frames"]:
        write_csv(cfg["frames"], FRAME_HEADER, grid.rows())
    if cfg["report"]:
        write_json(cfg["report"], report)
    print(
        f"nodes {report['nodes']}, points {len(points)}, "
        f"first-integral drift {report['max_first_integral_drift']:.3e}, "
        f"ratio drift {report['max_ratio_drift'] if report['max_ratio_drift'] is None else format(report['max_ratio_drift'], '.3e')}, "
        f"frame residual {report['max_frame_residual']:.3e}"
    )
    return EXIT_OK


def cmd_helix(args):
    fs = starkflow.FrameScalars(args.beta, args.mu, args.kappa)
    hs = helix.helix_spec(fs, args.max_den, args.ratio_tol)
    out = hs.to_json()
    try:
        out["invariant_ratio"] = starkflow.invariant_ratio(fs)
    except BZero as exc:
        out["invariant_ratio"] = None
        out["A_cubed"], out["B"] = exc.a_cubed, exc.b
    write_json(args.out, out)
    return EXIT_OK


def cmd_verify(args):
    """Fast self-test of the main invariants on small random samples."""
    from . import samples

    rng = np.random.default_rng(args.seed)
    lines = []

    def record(name, ok, detail):
        lines.append((name, ok))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    worst = 0.0
    for n in range(1, 4):
        for _ in range(20):
            A, _, _ = samples.random_stark(n, rng)
            worst = max(worst, float(austere.lift_odd_functions(austere.ShapeOperatorRep(A)).max()))
    record("hopf-lift", worst < 1e-9, f"max odd e_k of lift {worst:.2e}")

    worst = 0.0
    for n in range(1, 4):
        for _ in range(20):
            A, kind, _ = samples.random_stark(n, rng)
            Q = samples.random_phi_commuting(n, rng)
            cf = canonform.reduce_to_canonical(austere.ShapeOperatorRep(Q @ A @ Q.T))
            worst = max(worst, cf.residual if cf.kind == kind else np.inf)
    record("normal-form", worst < 1e-9, f"max residual {worst:.2e}")

    rs = starkflow.ReducedState(1.0, 1.0, 1.0)
    grid_y, states = starkflow.integrate_tuv(rs, "y", (0.0, 0.5), 1e-3)
    drift = max(
        abs(starkflow.first_integrals(starkflow.ReducedState(*s)).C + 1 / 3) for s in states
    )
    record("first-integrals", drift < 1e-8, f"C drift {drift:.2e}")

    hs = helix.helix_spec(starkflow.FrameScalars(3.0, 0.0, 0.0))
    F = helix.frenet_integrate(np.eye(3), hs.fs, [0.0, hs.closure.L])
    d = helix.phase_distance(F[1], F[0])
    record("helix-closure", hs.closure.closed and d < 1e-8, f"L={hs.closure.L:.6f}, defect {d:.2e}")
    return EXIT_OK if all(ok for _, ok in lines) else EXIT_CHECK


# -- argument parsing ------------------------------------------------------


def _add_run_flags(p):
    p.add_argument("--config", help="flat JSON config; flags override its values")
    for key in ("c0", "d0", "v0", "beta0", "mu0", "kappa0", "x_min", "x_max", "y_min", "y_max", "step"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    p.add_argument("--out", dest="out", help="CSV output path ('-' for stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="stark", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="austere / stark / Hopf-lift verdicts for a matrix")
    p.add_argument("matrix")
    p.add_argument("--tol", type=float, default=austere.DEFAULT_TOL)
    p.add_argument("--checks", help="comma list from austere,stark,lift")
    p.add_argument("--json", help="write the report as JSON to this path")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("canon", help="normal form of a stark shape operator")
    p.add_argument("matrix")
    p.add_argument("--tol", type=float, default=austere.DEFAULT_TOL)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("flow", help="integrate (t, u, v) over an (x, y) box")
    _add_run_flags(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("construct", help="build a patch and its helix point cloud")
    _add_run_flags(p)
    for key in ("s_min", "s_max", "s_step", "tol", "ratio_tol"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    p.add_argument("--max-den", dest="max_den", type=int)
    p.add_argument("--report", dest="report", help="JSON invariant report path")
    p.add_argument("--frames", dest="frames", help="CSV of surface frames and residuals")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("helix", help="spectrum and closure of one helix")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--max-den", dest="max_den", type=int, default=helix.DEFAULT_MAX_DEN)
    p.add_argument("--ratio-tol", dest="ratio_tol", type=float, default=helix.DEFAULT_RATIO_TOL)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_helix)

    p = sub.add_parser("verify", help="quick invariant self-test")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


INPUT_ERRORS = (ParseError, DimensionMismatch, ConfigError)
REGION_ERRORS = (OutsideValidRegion, OutsideCanonicalPatch, UDegenerate, StepUnderflow, MuZero)
CHECK_ERRORS = (NotStark, ToleranceBreach, NonUnitaryDrift)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except REGION_ERRORS as exc:
        where = getattr(exc, "coordinate", None)
        suffix = f" (last valid coordinate {where})" if where is not None else ""
        print(f"region error: {exc}{suffix}", file=sys.stderr)
        return EXIT_REGION
    except CHECK_ERRORS as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
