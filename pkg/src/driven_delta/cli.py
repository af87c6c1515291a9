"""Command-line surface: runs, sweeps, fits, validation, file outputs.

Outputs are deterministic: a RunManifest is hashed from the literal
parameter set and stamped into the CSV header line as a comment-free
extra column-free preamble is avoided -- the stamp lives in the manifest
file written next to the data.  Identical manifests produce byte
identical CSVs; SVG files are presentation only.

Exit codes: 0 success, 2 invalid manifest, 3 solver non-convergence,
4 validation failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ModelConfig, Potential, SurvivalTrace
from .errors import (
    ConvergenceError,
    DomainError,
    DrivenDeltaError,
    ManifestError,
    RefinementError,
    ResonanceRegimeError,
    StabilityError,
    ValidationError,
)

EXIT_OK = 0
EXIT_MANIFEST = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4

_POTENTIALS = {"u1": Potential.U1, "u2": Potential.U2, "free": Potential.FREE_TRAP}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def manifest_text(command: str, params: dict) -> str:
    lines = [f"tool_version={__version__}", f"command={command}"]
    for key in sorted(params):
        lines.append(f"{key}={params[key]}")
    body = "\n".join(lines)
    digest = hashlib.sha256(body.encode()).hexdigest()[:16]
    return body + f"\nmanifest_hash={digest}\n"


def _config_from_args(args) -> ModelConfig:
    try:
        pot = _POTENTIALS[args.potential]
        return ModelConfig(
            pot, args.a, args.r, args.omega, binding=pot is not Potential.FREE_TRAP
        )
    except (KeyError, DomainError) as exc:
        raise ManifestError(str(exc)) from exc


def _apply_config_file(args, parser):
    """Flat INI sections [model]/[run]; flags override file values."""
    if not getattr(args, "config", None):
        return args
    cp = configparser.ConfigParser()
    read = cp.read(args.config)
    if not read:
        raise ManifestError(f"config file {args.config} not found")
    defaults = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            defaults[key.replace("-", "_")] = val
    for key, val in defaults.items():
        if hasattr(args, key) and parser.get_default(key) == getattr(args, key):
            cur = parser.get_default(key)
            if isinstance(cur, float):
                setattr(args, key, float(val))
            elif isinstance(cur, int):
                setattr(args, key, int(val))
            else:
                setattr(args, key, val)
    return args


def _trace_rows(trace: SurvivalTrace):
    for t, th in zip(trace.t_grid, trace.theta):
        yield (float(t), float(th.real), float(th.imag), float(abs(th) ** 2))


def _run_pipeline(config, pipeline, t_max, dt, tol):
    from .laplace import invert_survival_direct
    from .oracle import GridSpec, evolve_pde
    from .timedomain import survival_volterra

    if pipeline == "volterra":
        return survival_volterra(config, t_max, dt)
    if pipeline == "laplace":
        n = max(int(t_max / max(dt * 25, 0.25)), 64)
        tg = np.linspace(0.0, t_max, n + 1)
        return invert_survival_direct(config, tg, tol=tol)
    if pipeline == "oracle":
        grid = GridSpec.for_run(config, t_max)
        stride = max(int(round(0.25 / grid.dt)), 1)
        return evolve_pde(config, "bound_state", grid, t_max,
                          sample_stride=stride).trace
    raise ManifestError(f"unknown pipeline {pipeline!r}")


def cmd_survival(args) -> int:
    config = _config_from_args(args)
    pipelines = ["laplace", "volterra", "oracle"] if args.pipeline == "all" else [args.pipeline]
    out = args.out
    os.makedirs(out, exist_ok=True)
    params = dict(potential=args.potential, a=args.a, r=args.r, omega=args.omega,
                  tmax=args.tmax, dt=args.dt, pipeline=args.pipeline, tol=args.tol)
    _atomic_write(os.path.join(out, "manifest.txt"), manifest_text("survival", params))
    traces = {}
    for pl in pipelines:
        traces[pl] = _run_pipeline(config, pl, args.tmax, args.dt, args.tol)
        name = "theta.csv" if len(pipelines) == 1 else f"theta_{pl}.csv"
        write_csv(os.path.join(out, name),
                  ["t", "re_theta", "im_theta", "abs2"], _trace_rows(traces[pl]))
    from .svgplot import line_plot

    curves = []
    for pl, tr in traces.items():
        curves.append((tr.t_grid, np.log10(np.maximum(tr.abs2, 1e-300)), pl))
    line_plot(os.path.join(out, "theta.svg"), curves, title="survival probability",
              xlabel="t", ylabel="log10 |theta|^2")
    if len(traces) > 1:
        base = traces[pipelines[0]]
        report = ["pair,max_relative_deviation"]
        for pl in pipelines[1:]:
            other = traces[pl]
            tg = other.t_grid[np.isin(other.t_grid, base.t_grid)]
            if len(tg) < 4:
                n = min(len(base.t_grid), len(other.t_grid))
                a2b = np.interp(other.t_grid[:n], base.t_grid, base.abs2)
                a2o = other.abs2[:n]
            else:
                a2b = base.abs2[np.isin(base.t_grid, tg)]
                a2o = other.abs2[np.isin(other.t_grid, tg)]
            mask = a2b > 1e-6
            dev = float(np.max(np.abs(a2o[mask] - a2b[mask]) / a2b[mask])) if mask.any() else 0.0
            report.append(f"{pipelines[0]}-vs-{pl},{_fmt(dev)}")
        _atomic_write(os.path.join(out, "deviation.csv"), "\n".join(report) + "\n")
    print(f"wrote {out}/theta*.csv")
    return EXIT_OK


def cmd_stabilize(args) -> int:
    from .floquet import stabilization_search

    os.makedirs(args.out, exist_ok=True)
    a_values = np.linspace(args.a_min, args.a_max, args.a_steps)
    om_values = np.linspace(args.omega_min, args.omega_max, args.omega_steps)
    pot = _POTENTIALS[args.potential]
    mode = "free" if pot is Potential.FREE_TRAP else "bound"
    rows = []
    for a in a_values:
        for om in om_values:
            try:
                pt = stabilization_search(float(a), float(om), args.N, mode,
                                          potential=pot)
            except DomainError:
                continue
            if pt is not None:
                rows.append((pt.a, pt.omega, pt.r_s, pt.g0, pt.N, pt.residual))
    params = dict(potential=args.potential, a_min=args.a_min, a_max=args.a_max,
                  a_steps=args.a_steps, omega_min=args.omega_min,
                  omega_max=args.omega_max, omega_steps=args.omega_steps, N=args.N)
    _atomic_write(os.path.join(args.out, "manifest.txt"),
                  manifest_text("stabilize", params))
    write_csv(os.path.join(args.out, "manifold.csv"),
              ["a", "omega", "r_s", "g0", "N", "residual"], rows)
    print(f"wrote {args.out}/manifold.csv ({len(rows)} points)")
    return EXIT_OK


def cmd_fit(args) -> int:
    from .fitting import fit_exponential_window, fit_power_law

    data = np.genfromtxt(args.theta_csv, delimiter=",", names=True)
    t = data["t"]
    theta = data["re_theta"] + 1j * data["im_theta"]
    cfg = ModelConfig(Potential.U1, 0.0, 0.0, args.omega)  # omega only feeds periods
    trace = SurvivalTrace(t, theta, "volterra", cfg,
                          partial_window=bool(t[0] > 0.0))
    window = (args.t1, args.t2)
    if args.kind == "exponential_window":
        rep = fit_exponential_window(trace, window)
    elif args.kind == "power_law_tail":
        rep = fit_power_law(trace, window)
    else:
        raise ManifestError(f"unknown fit kind {args.kind!r}")
    print(f"kind={rep.kind} window=[{rep.window[0]}, {rep.window[1]}] "
          f"slope={rep.slope:.6g} residual={rep.residual:.3g} verdict={rep.verdict}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "fit.csv"),
                  ["kind", "t1", "t2", "slope", "intercept", "residual", "verdict"],
                  [(rep.kind, float(rep.window[0]), float(rep.window[1]), rep.slope,
                    rep.intercept, rep.residual, rep.verdict)])
    return EXIT_OK


def cmd_free_trap(args) -> int:
    from .floquet import stabilization_search
    from .freeparticle import WavePacket, trapped_evolution
    from .svgplot import line_plot

    os.makedirs(args.out, exist_ok=True)
    pt = stabilization_search(args.a, args.omega, args.N, "free")
    if pt is None:
        print("no stabilization point in the scanned amplitude range", file=sys.stderr)
        return EXIT_SOLVER
    r = args.r if args.r > 0 else pt.r_s
    config = ModelConfig(Potential.FREE_TRAP, args.a, r, args.omega, binding=False)
    packet = WavePacket(width=args.packet_width)
    tg = np.linspace(200.0, args.tmax, max(int(args.tmax - 200.0), 400))
    trace = trapped_evolution(config, packet, pt, tg)
    params = dict(a=args.a, omega=args.omega, N=args.N, r=r, tmax=args.tmax,
                  packet_width=args.packet_width)
    _atomic_write(os.path.join(args.out, "manifest.txt"),
                  manifest_text("free-trap", params))
    write_csv(os.path.join(args.out, "localization.csv"), ["t", "p_loc"],
              [(float(t), float(p)) for t, p in zip(trace.t_grid, trace.p_loc)])
    write_csv(os.path.join(args.out, "point.csv"),
              ["a", "omega", "r_s", "g0", "N", "residual", "floor", "quasiperiodicity"],
              [(pt.a, pt.omega, pt.r_s, pt.g0, pt.N, pt.residual,
                trace.floor, trace.quasiperiodicity)])
    line_plot(os.path.join(args.out, "localization.svg"),
              [(trace.t_grid, trace.p_loc, "trapped")],
              title="windowed probability", xlabel="t", ylabel="P(|x|<L)")
    print(f"r_s={pt.r_s:.6f} floor={trace.floor:.4g} "
          f"quasiperiodicity={trace.quasiperiodicity:.4f}")
    return EXIT_OK


def _sweep_point(job):
    potential, a, r, omega, t_max, dt, out_dir, idx = job
    config = ModelConfig(_POTENTIALS[potential], a, r, omega,
                         binding=potential != "free")
    from .timedomain import survival_volterra

    trace = survival_volterra(config, t_max, dt)
    path = os.path.join(out_dir, f"theta_{idx:04d}.csv")
    write_csv(path, ["t", "re_theta", "im_theta", "abs2"], _trace_rows(trace))
    return idx, float(trace.abs2[-1])


def cmd_sweep(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    omegas = np.linspace(args.omega_min, args.omega_max, args.omega_steps)
    jobs = [
        (args.potential, args.a, args.r, float(om), args.tmax, args.dt, args.out, i)
        for i, om in enumerate(omegas)
    ]
    params = dict(potential=args.potential, a=args.a, r=args.r,
                  omega_min=args.omega_min, omega_max=args.omega_max,
                  omega_steps=args.omega_steps, tmax=args.tmax, dt=args.dt)
    _atomic_write(os.path.join(args.out, "manifest.txt"), manifest_text("sweep", params))
    rows = []
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for idx, final in pool.map(_sweep_point, jobs):
                rows.append((float(omegas[idx]), final))
    else:
        for job in jobs:
            idx, final = _sweep_point(job)
            rows.append((float(omegas[idx]), final))
    rows.sort()
    write_csv(os.path.join(args.out, "summary.csv"), ["omega", "abs2_final"], rows)
    print(f"wrote {args.out}/summary.csv ({len(rows)} points)")
    return EXIT_OK


def _validate_battery(tol_scale: float = 1.0):
    """Invariant battery shared by cmd_validate and the tests.

    Yields (name, passed, detail) tuples; every check is fast.
    """
    from .branchcut import (
        HORIZONTAL,
        BranchSpec,
        kernel_k_minus,
        kernel_k_plus,
        sqrt_one_minus_ip,
    )
    from .laplace import invert_survival_direct
    from .oracle import GridSpec, discrete_bound_state, evolve_pde
    from .timedomain import survival_volterra

    rng = np.random.default_rng(20260810)

    # branch round-trip continuity on a closed path not encircling -i
    spec = HORIZONTAL
    center, radius = 0.8 - 0.4j, 0.55
    th = np.linspace(0.0, 2 * np.pi, 4001)
    path = center + radius * np.exp(1j * th)
    vals = np.asarray(sqrt_one_minus_ip(path, spec))
    closed = abs(vals[0] - vals[-1])
    yield "branch-roundtrip-continuity", closed < 1e-10 * tol_scale, f"defect {closed:.2e}"

    # algebraic kernel identity at random points
    worst = 0.0
    for _ in range(40):
        p = complex(rng.uniform(-2, 2), rng.uniform(-3, 3))
        if abs(p) < 1e-3 or abs(p + 1j) < 1e-3:
            continue
        w = sqrt_one_minus_ip(p, spec)
        lhs = kernel_k_plus(p, 0.7, spec) * w - kernel_k_minus(p, 0.7, spec)
        worst = max(worst, abs(lhs - 1.0))
    yield "kernel-algebraic-identity", worst < 1e-12 * tol_scale, f"worst {worst:.2e}"

    # r = 0: laplace exact, volterra to 1e-10
    cfg0 = ModelConfig(Potential.U1, 0.59, 0.0, 1.25)
    tg = np.linspace(0.0, 10.0, 51)
    trl = invert_survival_direct(cfg0, tg)
    dl = float(np.max(np.abs(trl.theta - 1.0)))
    yield "laplace-r0-exact", dl == 0.0, f"max dev {dl:.2e}"
    trv = survival_volterra(cfg0, 10.0, 0.01)
    dv = float(np.max(np.abs(trv.theta - 1.0)))
    yield "volterra-r0", dv < 1e-10 * tol_scale, f"max dev {dv:.2e}"

    # U2 parity r -> -r
    cfg_p = ModelConfig(Potential.U2, 0.8, 0.6, 1.3)
    cfg_m = ModelConfig(Potential.U2, 0.8, -0.6, 1.3)
    trp = survival_volterra(cfg_p, 12.0, 0.01)
    trm = survival_volterra(cfg_m, 12.0, 0.01)
    dpar = float(np.max(np.abs(trp.abs2 - trm.abs2)))
    yield "u2-parity", dpar < 1e-10 * tol_scale, f"max dev {dpar:.2e}"

    # |theta| <= 1 + 1e-6 on produced traces
    cfg1 = ModelConfig(Potential.U1, 0.59, 1.0, 1.25)
    tr1 = survival_volterra(cfg1, 30.0, 0.01)
    bound_ok = tr1.check_bound(1e-6)
    yield "survival-bound", bound_ok, f"max |theta| {np.abs(tr1.theta).max():.8f}"

    # truncation doubling stability of the laplace pipeline
    tg2 = np.linspace(0.0, 20.0, 41)
    t_a = invert_survival_direct(cfg1, tg2, tol=1e-7)
    t_b = invert_survival_direct(cfg1, tg2, tol=1e-7, n_strips=260)
    dt2 = float(np.max(np.abs(t_a.theta - t_b.theta)))
    yield "truncation-doubling", dt2 < 1e-6 * tol_scale, f"max dev {dt2:.2e}"

    # laplace vs volterra cross-pipeline agreement
    idx = (tg2 / 0.01 + 0.5).astype(int)
    cross = float(np.max(np.abs(t_a.theta - tr1.theta[idx[: len(tg2)]])))
    yield "cross-pipeline", cross < 1e-4 * tol_scale, f"max dev {cross:.2e}"

    # oracle unitarity and bound-state energy
    g = GridSpec(40.0, 0.05, 5e-3)
    res = evolve_pde(cfg0, "bound_state", g, 5.0, sample_stride=50)
    yield "oracle-unitarity", res.norm_drift < 1e-6, f"drift {res.norm_drift:.2e}"
    e_b, _, _ = discrete_bound_state(g)
    e_err = abs(e_b + 1.0)
    yield "oracle-bound-energy", e_err < 2.0 * g.dx ** 2, f"error {e_err:.2e}"


def cmd_validate(args) -> int:
    failures = 0
    for name, ok, detail in _validate_battery():
        status = "PASS" if ok else "FAIL"
        print(f"{status:4s}  {name:32s} {detail}")
        if not ok:
            failures += 1
    if failures:
        print(f"{failures} invariant(s) failed", file=sys.stderr)
        return EXIT_VALIDATION
    print("all invariants pass")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="driven-delta",
        description="survival and trapping of a delta-bound state under "
        "harmonic delta forcing",
    )
    ap.add_argument("--config", help="INI file with [model]/[run] key-value sections")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_model(p):
        p.add_argument("--potential", choices=list(_POTENTIALS), default="u1")
        p.add_argument("--a", type=float, default=0.59)
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--omega", type=float, default=1.25)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--out", default="out")

    p = sub.add_parser("survival", help="theta(t) traces and plots")
    add_model(p)
    p.add_argument("--tmax", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--pipeline", choices=["laplace", "volterra", "oracle", "all"],
                   default="volterra")
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("stabilize", help="non-decay manifold search")
    p.add_argument("--potential", choices=list(_POTENTIALS), default="u1")
    p.add_argument("--a-min", type=float, default=0.59)
    p.add_argument("--a-max", type=float, default=0.59)
    p.add_argument("--a-steps", type=int, default=1)
    p.add_argument("--omega-min", type=float, default=1.0)
    p.add_argument("--omega-max", type=float, default=1.3)
    p.add_argument("--omega-steps", type=int, default=13)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_stabilize)

    p = sub.add_parser("fit", help="window fits on a theta.csv")
    p.add_argument("theta_csv")
    p.add_argument("--kind", choices=["exponential_window", "power_law_tail"],
                   default="exponential_window")
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--omega", type=float, default=1.25,
                   help="drive frequency of the run (sets the period rule)")
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("free-trap", help="free-particle trapping diagnostics")
    p.add_argument("--a", type=float, default=4.0)
    p.add_argument("--omega", type=float, default=1.5)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--r", type=float, default=0.0,
                   help="drive amplitude; 0 means use the located r_s")
    p.add_argument("--tmax", type=float, default=1000.0)
    p.add_argument("--packet-width", type=float, default=1.0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_free_trap)

    p = sub.add_parser("validate", help="run the invariant battery")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="frequency sweep of volterra runs")
    p.add_argument("--potential", choices=list(_POTENTIALS), default="u1")
    p.add_argument("--a", type=float, default=0.59)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--omega-min", type=float, default=0.8)
    p.add_argument("--omega-max", type=float, default=1.3)
    p.add_argument("--omega-steps", type=int, default=6)
    p.add_argument("--tmax", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args, parser)
        return args.func(args)
    except ManifestError as exc:
        print(f"invalid manifest: {exc}", file=sys.stderr)
        return EXIT_MANIFEST
    except (ConvergenceError, RefinementError, ResonanceRegimeError,
            StabilityError) as exc:
        print(f"solver non-convergence: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DrivenDeltaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MANIFEST


if __name__ == "__main__":
    sys.exit(main())
