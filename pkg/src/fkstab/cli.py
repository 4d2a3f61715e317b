"""Command-line entry points and experiment configuration.

Config files are INI-style key/value records with one nesting level
(sections [domain], [params], [optimizer]). Every CSV artifact carries a
comment header with the tool version, a hash of the resolved configuration,
the mesh size, the full energy parameters, and the RNG seed; bodies are
RFC-4180 with '.' decimals, so identical config + seed reproduce files
byte-for-byte. Plot scripts are plain gnuplot text operating on the CSVs.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .elliptic import field_to_csv, flux_traces
from .energy import EnergyParams, evaluate, run_pipeline
from .mesh import mesh_to_csv
from .errors import (
    ConfigError,
    FkstabError,
    GridTooCoarse,
    HardCapViolation,
    KinkAtConstraint,
    NotNested,
    SeedTooClose,
)
from .geometry import StarDomain, barycenter
from .optimizer import (
    OptimizerConfig,
    key_estimate_check,
    minimize,
    selection_step,
    stability_sweep,
)
from .shapegrad import BoundaryField, fb_residual, hadamard, perturb_domain

USAGE_ERROR = 2
SOLVER_ERROR = 3

FUNCTIONALS = ("lambda1", "tor", "vol", "barycenter")


# ---------------------------------------------------------------- config i/o


def load_domain(path: str | Path) -> StarDomain:
    """Read a star domain from the flat [domain] record."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"domain config not found: {path}")
    cp = configparser.ConfigParser()
    cp.read(path)
    if "domain" not in cp:
        raise ConfigError(f"{path}: missing [domain] section")
    sec = cp["domain"]
    try:
        cx, cy = (float(tok) for tok in sec.get("center", "0 0").split())
        r0 = float(sec.get("r0", "1.0"))
        modes = []
        raw = sec.get("modes", "").strip()
        if raw:
            for item in raw.split(","):
                k, a, b = item.strip().split(":")
                modes.append((int(k), float(a), float(b)))
        return StarDomain((cx, cy), r0, tuple(modes))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: malformed domain record ({exc})") from exc


def save_domain(d: StarDomain, path: str | Path) -> None:
    modes = ", ".join(f"{k}:{a:.17g}:{b:.17g}" for k, a, b in d.modes)
    text = (
        "[domain]\n"
        f"center = {d.center[0]:.17g} {d.center[1]:.17g}\n"
        f"r0 = {d.r0:.17g}\n"
        f"modes = {modes}\n"
    )
    Path(path).write_text(text, encoding="utf-8")


def load_params(path: str | Path | None, overrides: dict) -> EnergyParams:
    """EnergyParams from the optional [params] section plus CLI overrides."""
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"params config not found: {p}")
        cp = configparser.ConfigParser()
        cp.read(p)
        if "params" in cp:
            sec = cp["params"]
            for key in ("v", "vmax", "eta", "Tfrak", "tau", "c_nl", "c0", "gap_min"):
                if key in sec:
                    values[key] = float(sec[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return EnergyParams(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------- csv output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def config_hash(parts: dict) -> str:
    blob = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(parts.items()))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_csv(path: Path, meta: dict, columns: list[str], rows: list[tuple]) -> None:
    """CSV with a '#' comment header block followed by an RFC-4180 body."""
    lines = [f"# fkstab {__version__}"]
    lines.append(f"# config_hash={config_hash(meta)}")
    for key, value in meta.items():
        lines.append(f"# {key}={_fmt(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def params_meta(p: EnergyParams, h: float, seed: int) -> dict:
    return {
        "h": h,
        "seed": seed,
        "v": p.v,
        "vmax": p.vmax,
        "eta": p.eta,
        "Tfrak": p.Tfrak,
        "tau": p.tau,
        "c_nl": p.c_nl,
        "c0": p.resolved_c0(),
        "gap_min": p.gap_min,
    }


def write_plot_script(
    csv_path: Path, columns: list[str], x: str, ys: list[str], title: str
) -> Path:
    """Companion gnuplot script plotting the named columns of the CSV."""
    out = csv_path.with_suffix(".plt")
    xi = columns.index(x) + 1
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xlabel '{x}'",
        "set key outside",
        "plot " + ", \\\n     ".join(
            f"'{csv_path.name}' using {xi}:{columns.index(c) + 1} "
            f"with linespoints title '{c}'"
            for c in ys
        ),
    ]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


# --------------------------------------------------------------- subcommands


def _outdir(args) -> Path:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_eig(args) -> int:
    d = load_domain(args.domain)
    p = load_params(args.params, {})
    state = run_pipeline(d, p, args.h)
    rep = state.report
    print(f"lambda1 = {rep.lambda1:.6f}")
    print(f"lambda2 = {state.spectral.lambda2:.6f}")
    meta = params_meta(p, args.h, args.seed)
    meta["domain"] = args.domain
    path = _outdir(args) / "eig.csv"
    write_csv(
        path,
        meta,
        ["h", "lambda1", "lambda2", "residual1", "residual2", "gap_ok"],
        [(args.h, rep.lambda1, state.spectral.lambda2,
          state.spectral.residual1, state.spectral.residual2, rep.gap_ok)],
    )
    if args.plot_script:
        write_plot_script(path, ["h", "lambda1", "lambda2", "residual1", "residual2", "gap_ok"],
                          "h", ["lambda1", "lambda2"], "Dirichlet eigenvalues")
    if args.dump_mesh:
        mesh_to_csv(state.mesh, str(_outdir(args) / "mesh"))
    if args.dump_field:
        field_to_csv(state.spectral.u, str(_outdir(args) / "eigenfunction.csv"))
    return 0


def cmd_torsion(args) -> int:
    d = load_domain(args.domain)
    p = load_params(args.params, {})
    state = run_pipeline(d, p, args.h)
    w = state.torsion.w.values[state.system.interior]
    grad_energy = float(w @ (state.system.stiffness_int @ w))
    integral = float(state.system.load_vector[state.system.interior] @ w)
    identity_gap = abs(grad_energy - integral) / abs(integral)
    print(f"tor = {state.report.tor:.6f}")
    print(f"identity |∫|∇w|² - ∫w| / ∫w = {identity_gap:.3e}")
    meta = params_meta(p, args.h, args.seed)
    meta["domain"] = args.domain
    write_csv(
        _outdir(args) / "torsion.csv",
        meta,
        ["h", "tor", "w_max", "identity_gap"],
        [(args.h, state.report.tor, float(state.torsion.w.values.max()), identity_gap)],
    )
    if args.dump_field:
        field_to_csv(state.torsion.w, str(_outdir(args) / "torsion_function.csv"))
    return 0


def cmd_energy(args) -> int:
    d = load_domain(args.domain)
    p = load_params(args.params, {"tau": args.tau, "c_nl": args.c_nl})
    rep = evaluate(d, p, args.h)
    dr = rep.d_report
    print(f"E_base = {rep.E_base:.6f}  F_total = {rep.F_total:.6f}")
    meta = params_meta(p, args.h, args.seed)
    meta["domain"] = args.domain
    write_csv(
        _outdir(args) / "energy.csv",
        meta,
        ["lambda1", "tor", "vol", "f_pen", "d0", "d1", "asym", "d_star_sq",
         "h_val", "E_base", "F_total", "gap_ok"],
        [(rep.lambda1, rep.tor, rep.vol, rep.f_pen, dr.d0, dr.d1, dr.asym,
          dr.d_star_sq, rep.h_val, rep.E_base, rep.F_total, rep.gap_ok)],
    )
    return 0


def cmd_distances(args) -> int:
    d = load_domain(args.domain)
    p = load_params(args.params, {})
    state = run_pipeline(d, p, args.h)
    dr = state.report.d_report
    print(f"d0 = {dr.d0:.6f}  d1 = {dr.d1:.6f}  asym = {dr.asym:.6f}  d_star_sq = {dr.d_star_sq:.6f}")
    meta = params_meta(p, args.h, args.seed)
    meta["domain"] = args.domain
    write_csv(
        _outdir(args) / "distances.csv",
        meta,
        ["tag", "d0", "d1", "asym", "d_star_sq"],
        [(args.tag, dr.d0, dr.d1, dr.asym, dr.d_star_sq)],
    )
    return 0


def random_domain(rng: np.random.Generator, target_area: float = math.pi) -> StarDomain:
    """Random small-coefficient Fourier domain, renormalized to the target area."""
    n_modes = int(rng.integers(2, 4))
    ks = rng.choice(np.arange(1, 7), size=n_modes, replace=False)
    modes = tuple(
        (int(k), float(rng.normal(0.0, 0.02)), float(rng.normal(0.0, 0.02))) for k in sorted(ks)
    )
    return StarDomain((0.0, 0.0), 1.0, modes).renormalized_to_area(target_area)


def random_field(rng: np.random.Generator) -> BoundaryField:
    ks = rng.choice(np.arange(1, 7), size=2, replace=False)
    return BoundaryField(
        const=float(rng.normal(0.0, 0.3)),
        modes=tuple((int(k), float(rng.normal(0.0, 0.3)), float(rng.normal(0.0, 0.3)))
                    for k in sorted(ks)),
    )


def gradient_check_rows(
    n_domains: int, n_fields: int, h: float, seed: int, fd_step: float, p: EnergyParams
) -> list[tuple]:
    """(functional, field id, analytic, fd, rel_err) over random domains and fields."""
    rng = np.random.default_rng(seed)
    rows = []
    for di in range(n_domains):
        d = random_domain(rng)
        state = run_pipeline(d, p, h)
        traces = flux_traces(state.system, state.spectral, state.torsion)
        for fi in range(n_fields):
            field = random_field(rng)
            g = hadamard(d, traces, field, state.spectral, state.torsion)
            probes = {}
            for sgn in (+1.0, -1.0):
                dp = perturb_domain(d, field, sgn * fd_step)
                st = run_pipeline(dp, p, h)
                probes[sgn] = (
                    st.report.lambda1,
                    st.report.tor,
                    st.report.vol,
                    np.asarray(barycenter(dp)),
                )
            fd = [(probes[1.0][i] - probes[-1.0][i]) / (2.0 * fd_step) for i in range(4)]
            analytic = [g.dLambda1, g.dTor, g.dVol, g.dBary]
            tag = f"d{di}f{fi}"
            # tiny absolute floor so structurally-zero derivatives (symmetric
            # domain/field pairs) compare as zero instead of roundoff ratios
            for name, av, fv in zip(FUNCTIONALS, analytic, fd):
                if name == "barycenter":
                    err = float(np.linalg.norm(av - fv) / max(np.linalg.norm(fv), 1e-9))
                    rows.append((name, tag, float(np.linalg.norm(av)), float(np.linalg.norm(fv)), err))
                else:
                    err = abs(av - fv) / max(abs(fv), 1e-9)
                    rows.append((name, tag, av, fv, err))
    return rows


def cmd_hadamard_check(args) -> int:
    p = load_params(args.params, {})
    rows = gradient_check_rows(args.domains, args.fields, args.h, args.seed, args.fd_step, p)
    worst = max(r[4] for r in rows)
    print(f"{len(rows)} derivative checks, worst rel_err = {worst:.3e}")
    meta = params_meta(p, args.h, args.seed)
    meta.update({"fd_step": args.fd_step, "n_domains": args.domains, "n_fields": args.fields})
    write_csv(
        _outdir(args) / "hadamard.csv",
        meta,
        ["functional", "field", "analytic", "fd", "rel_err"],
        rows,
    )
    return 0


def cmd_fb_residual(args) -> int:
    d = load_domain(args.domain)
    p = load_params(args.params, {})
    state = run_pipeline(d, p, args.h)
    traces = flux_traces(state.system, state.spectral, state.torsion)
    res = fb_residual(d, traces, p)
    print(f"A0 = {res.A0:.6f}  sup|q - A0| = {res.sup_norm:.4e}  cv = {res.cv:.4%}")
    meta = params_meta(p, args.h, args.seed)
    meta.update({"domain": args.domain, "A0": res.A0, "sup_norm": res.sup_norm, "cv": res.cv})
    path = _outdir(args) / "fb_residual.csv"
    write_csv(
        path,
        meta,
        ["theta", "q", "residual"],
        list(zip(res.theta, res.q, res.residual)),
    )
    if args.plot_script:
        write_plot_script(path, ["theta", "q", "residual"],
                          "theta", ["q", "residual"], "free-boundary residual")
    return 0


def _sweep_task(payload):
    k, t, p, h = payload
    return stability_sweep([k], [t], p, h)[0]


def cmd_stability_sweep(args) -> int:
    p = load_params(args.params, {})
    modes = list(range(args.kmin, args.kmax + 1))
    amps = [float(t) for t in args.amplitudes.split(",")]
    if args.jobs > 1:
        payloads = [(k, t, p, args.h) for k in modes for t in amps]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, payloads))
    else:
        rows = stability_sweep(modes, amps, p, args.h)
    out = []
    for r in rows:
        ratio = r.deficit / r.d_star_sq if r.d_star_sq > 0 else math.inf
        out.append((r.k, r.amplitude, r.deficit, r.d0, r.d1, r.asym, r.d_star_sq, ratio))
    best = min(o[7] for o in out)
    print(f"min deficit / d_star_sq = {best:.4f}")
    meta = params_meta(p, args.h, args.seed)
    path = _outdir(args) / "sweep.csv"
    write_csv(
        path,
        meta,
        ["k", "amplitude", "deficit", "d0", "d1", "asym", "d_star_sq", "deficit_over_dsq"],
        out,
    )
    if args.plot_script:
        write_plot_script(path, ["k", "amplitude", "deficit", "d0", "d1", "asym",
                                 "d_star_sq", "deficit_over_dsq"],
                          "k", ["deficit", "d_star_sq"], "stability sweep")
    return 0


def cmd_key_estimate(args) -> int:
    inner = load_domain(args.inner)
    outer = load_domain(args.outer)
    p = load_params(args.params, {})
    rep = key_estimate_check(inner, outer, args.h, p)
    print(f"lhs(|f|=1) = {rep.lhs_abs:.6f}  rhs = {rep.rhs:.6f}  C_emp = {rep.c_emp:.4f}")
    meta = params_meta(p, args.h, args.seed)
    meta.update({"inner": args.inner, "outer": args.outer})
    write_csv(
        _outdir(args) / "key_estimate.csv",
        meta,
        ["lhs_mean", "lhs_abs", "rhs", "c_emp", "lambda_inner", "lambda_outer",
         "tor_inner", "tor_outer", "monotone"],
        [(rep.lhs_mean, rep.lhs_abs, rep.rhs, rep.c_emp, rep.lambda_inner,
          rep.lambda_outer, rep.tor_inner, rep.tor_outer, rep.monotone)],
    )
    return 0


def _optimizer_config(args) -> OptimizerConfig:
    return OptimizerConfig(
        modes_k=args.modes_k,
        max_iter=args.max_iter,
        fine_iters=args.fine_iters,
        tol_grad=args.tol_grad,
        volume_handling=args.mode,
        h_coarse=args.h_coarse,
        h_fine=args.h_fine,
    )


def cmd_minimize(args) -> int:
    d = load_domain(args.domain)
    p = load_params(args.params, {"tau": args.tau, "c_nl": args.c_nl})
    cfg = _optimizer_config(args)
    final, trace = minimize(d, p, cfg)
    state = run_pipeline(final, p, cfg.h_fine)
    print(f"iterations = {len(trace.rows)}  converged = {trace.converged}  "
          f"final objective = {state.report.F_total:.8f}")
    meta = params_meta(p, cfg.h_fine, args.seed)
    meta.update({"domain": args.domain, "mode": args.mode,
                 "converged": trace.converged, "stalled": trace.stalled})
    path = _outdir(args) / "minimize_trace.csv"
    write_csv(
        path,
        meta,
        ["iteration", "objective", "grad_norm", "area", "d_star_sq", "h"],
        [(r.iteration, r.objective, r.grad_norm, r.area, r.d_star_sq, r.h) for r in trace.rows],
    )
    save_domain(final, _outdir(args) / "minimize_final.cfg")
    if args.plot_script:
        write_plot_script(path, ["iteration", "objective", "grad_norm", "area",
                                 "d_star_sq", "h"],
                          "iteration", ["objective", "grad_norm"], "descent trace")
    return 0


def cmd_selection(args) -> int:
    seed_dom = load_domain(args.domain)
    p = load_params(args.params, {"tau": args.tau})
    cfg = _optimizer_config(args)
    run = selection_step(seed_dom, p, cfg)
    print(f"d_j = {run.d_j:.6f}  d_star(V) = {run.d_star_min:.6f}")

    def verdict(v):
        return "NOT CONVERGED" if v is None else ("PASS" if v else "FAIL")

    print(f"verdict A (deficit comparison): {verdict(run.verdict_deficit)}")
    print(f"verdict B (distance retention): {verdict(run.verdict_distance)}")
    meta = params_meta(p, cfg.h_fine, args.seed)
    meta.update({"domain": args.domain, **{k: _fmt(v) for k, v in run.metadata.items()}})
    write_csv(
        _outdir(args) / "selection.csv",
        meta,
        ["d_j", "c_nl", "tau", "deficit_seed", "deficit_min", "d_star_min",
         "floor_d", "floor_energy", "verdict_deficit", "verdict_distance", "converged"],
        [(run.d_j, run.c_nl, run.tau, run.deficit_seed, run.deficit_min, run.d_star_min,
          run.floor_d, run.floor_energy, run.verdict_deficit, run.verdict_distance,
          run.converged)],
    )
    save_domain(run.minimizer, _outdir(args) / "selection_minimizer.cfg")
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fkstab",
        description="Spectral shape functionals on star-shaped planar domains",
    )
    parser.add_argument("--version", action="version", version=f"fkstab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, h_default=0.02):
        sp.add_argument("--params", default=None, help="config file with a [params] section")
        sp.add_argument("--h", type=float, default=h_default, help="target mesh size")
        sp.add_argument("--outdir", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (recorded in outputs)")
        sp.add_argument("--plot-script", action="store_true", help="emit a gnuplot script")

    sp = sub.add_parser("eig", help="first two Dirichlet eigenvalues")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--dump-mesh", action="store_true", help="write vertex/triangle CSVs")
    sp.add_argument("--dump-field", action="store_true", help="write the eigenfunction CSV")
    common(sp)
    sp.set_defaults(func=cmd_eig)

    sp = sub.add_parser("torsion", help="torsion function and rigidity")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--dump-field", action="store_true", help="write the torsion function CSV")
    common(sp)
    sp.set_defaults(func=cmd_torsion)

    sp = sub.add_parser("energy", help="itemized base and penalized energy")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--c-nl", dest="c_nl", type=float, default=None)
    common(sp)
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("distances", help="distances to the matched ball")
    sp.add_argument("--domain", required=True)
    sp.add_argument("--tag", default="domain")
    common(sp)
    sp.set_defaults(func=cmd_distances)

    sp = sub.add_parser("hadamard-check", help="first variations vs finite differences")
    sp.add_argument("--fields", type=int, default=10)
    sp.add_argument("--domains", type=int, default=5)
    sp.add_argument("--fd-step", dest="fd_step", type=float, default=1e-3)
    common(sp, h_default=0.03)
    sp.set_defaults(func=cmd_hadamard_check)

    sp = sub.add_parser("fb-residual", help="free-boundary condition residual")
    sp.add_argument("--domain", required=True)
    common(sp)
    sp.set_defaults(func=cmd_fb_residual)

    sp = sub.add_parser("stability-sweep", help="deficits and distances over cosine modes")
    sp.add_argument("--kmin", type=int, default=2)
    sp.add_argument("--kmax", type=int, default=6)
    sp.add_argument("--amplitudes", default="0.05,0.025")
    sp.add_argument("--jobs", type=int, default=1, help="worker cap for the sweep grid")
    common(sp)
    sp.set_defaults(func=cmd_stability_sweep)

    sp = sub.add_parser("key-estimate", help="nested-domain eigenfunction estimate")
    sp.add_argument("--inner", required=True)
    sp.add_argument("--outer", required=True)
    common(sp)
    sp.set_defaults(func=cmd_key_estimate)

    def optimizer_args(sp):
        sp.add_argument("--mode", choices=("renormalize", "penalized"), default="renormalize")
        sp.add_argument("--tau", type=float, default=None)
        sp.add_argument("--c-nl", dest="c_nl", type=float, default=None)
        sp.add_argument("--modes-k", dest="modes_k", type=int, default=8)
        sp.add_argument("--max-iter", dest="max_iter", type=int, default=40)
        sp.add_argument("--fine-iters", dest="fine_iters", type=int, default=10)
        sp.add_argument("--tol-grad", dest="tol_grad", type=float, default=1e-3)
        sp.add_argument("--h-coarse", dest="h_coarse", type=float, default=0.04)
        sp.add_argument("--h-fine", dest="h_fine", type=float, default=0.02)

    sp = sub.add_parser("minimize", help="gradient descent on boundary coefficients")
    sp.add_argument("--domain", required=True)
    optimizer_args(sp)
    common(sp)
    sp.set_defaults(func=cmd_minimize)

    sp = sub.add_parser("selection", help="seeded penalized run with comparison verdicts")
    sp.add_argument("--domain", required=True)
    optimizer_args(sp)
    common(sp)
    sp.set_defaults(func=cmd_selection)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, NotNested, SeedTooClose, GridTooCoarse, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (FkstabError, HardCapViolation, KinkAtConstraint) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())
