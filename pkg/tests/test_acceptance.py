"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
PASS/FAIL lines. The module-level property suites (the other test files)
complete the tenth criterion together with the byte-exact determinism check
here.
"""

from __future__ import annotations

import math
import time

import numpy as np

from fkstab.cli import main, random_domain, random_field
from fkstab.energy import EnergyParams, run_pipeline
from fkstab.elliptic import flux_traces
from fkstab.geometry import StarDomain, barycenter
from fkstab.mesh import assemble, triangulate
from fkstab.elliptic import solve_spectrum, solve_torsion
from fkstab.optimizer import key_estimate_check
from fkstab.shapegrad import fb_residual, perturb_domain
from oracles import (
    DISK_LAMBDA1_REF,
    DISK_LAMBDA2_REF,
    DISK_TORSION_REF,
)

WOBBLE_CFG = "[domain]\ncenter = 0 0\nr0 = 1.0\nmodes = 2:0.1:0.0\n"


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[ACCEPTANCE] criterion {criterion:02d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_01_disk_spectrum(disk_state_h01_timed):
    state = disk_state_h01_timed.state
    lam1, lam2 = state.report.lambda1, state.spectral.lambda2
    err1 = abs(lam1 - DISK_LAMBDA1_REF) / DISK_LAMBDA1_REF
    err2 = abs(lam2 - DISK_LAMBDA2_REF) / DISK_LAMBDA2_REF
    ok = err1 < 1e-3 and err2 < 2e-3 and disk_state_h01_timed.seconds < 30.0
    report(1, ok,
           f"lambda1={lam1:.6f} (rel {err1:.1e}), lambda2={lam2:.6f} (rel {err2:.1e}), "
           f"runtime {disk_state_h01_timed.seconds:.1f}s < 30s at h=0.01")


def test_criterion_02_disk_torsion(disk_state_h01_timed):
    state = disk_state_h01_timed.state
    tor_err = abs(state.report.tor - DISK_TORSION_REF) / abs(DISK_TORSION_REF)
    gaps = []
    for h in (0.05, 0.02):
        sys = assemble(triangulate(StarDomain(), h))
        torsion = solve_torsion(sys)
        w = torsion.w.values[sys.interior]
        grad_sq = w @ (sys.stiffness_int @ w)
        integral = sys.load_vector[sys.interior] @ w
        gaps.append(abs(grad_sq - integral) / abs(integral))
    ok = tor_err < 1e-3 and all(g < 1e-8 for g in gaps)
    report(2, ok,
           f"tor rel err {tor_err:.1e} < 1e-3; energy identity gap "
           f"{max(gaps):.1e} < 1e-8 at h in {{0.05, 0.02}}")


def _fd_probe(dom, field, t, p, h):
    dp = perturb_domain(dom, field, t)
    sys = assemble(triangulate(dp, h))
    spec = solve_spectrum(sys, compute_second=False)
    tor = solve_torsion(sys)
    from fkstab.geometry import area

    return spec.lambda1, tor.tor, area(dp), np.asarray(barycenter(dp))


def test_criterion_03_hadamard_validation(gradient_rows, params):
    rows = gradient_rows["rows"]
    t0 = time.perf_counter()
    worst = max(r[4] for r in rows)
    ok_tol = worst < 0.02

    # step-halving self-convergence of the central differences
    rng = np.random.default_rng(123)
    orders = []
    h = 0.03
    for _ in range(2):
        dom = random_domain(rng)
        field = random_field(rng)
        eps = 2e-3
        probes = {}
        for t in (eps, eps / 2, eps / 4, -eps, -eps / 2, -eps / 4):
            probes[t] = _fd_probe(dom, field, t, params, h)
        for idx in (0, 1, 3):  # lambda1, tor, barycenter (volume FD is exact)
            fd = {
                e: (np.asarray(probes[e][idx]) - np.asarray(probes[-e][idx])) / (2 * e)
                for e in (eps, eps / 2, eps / 4)
            }
            d1 = np.linalg.norm(np.atleast_1d(fd[eps] - fd[eps / 2]))
            d2 = np.linalg.norm(np.atleast_1d(fd[eps / 2] - fd[eps / 4]))
            if d1 < 1e-10 and d2 < 1e-10:
                orders.append(2.0)  # converged to roundoff
            else:
                orders.append(math.log2(d1 / d2))
    runtime = gradient_rows["seconds"] + (time.perf_counter() - t0)
    ok = ok_tol and min(orders) >= 1.8 and runtime < 300.0
    report(3, ok,
           f"50 field/domain pairs, worst rel err {worst:.2%} < 2%; FD halving order "
           f"min {min(orders):.2f} >= 1.8; runtime {runtime:.0f}s < 300s")


def test_criterion_04_faber_krahn_positivity(fk_sweep):
    floor = fk_sweep["floor"].energy_floor
    deficits = [r["lambda1"] - r["lambda1_ball"] for r in fk_sweep["rows"]]
    above_floor = all(d >= -3.0 * floor for d in deficits)
    strict = all(
        r["lambda1"] - r["lambda1_ball"] > 0.0
        for r in fk_sweep["rows"]
        if r["d0"] > 0.05
    )
    n_strict = sum(1 for r in fk_sweep["rows"] if r["d0"] > 0.05)
    ok = above_floor and strict and len(fk_sweep["rows"]) == 100
    report(4, ok,
           f"100 domains: min deficit {min(deficits):.2e} >= -3*floor ({-3 * floor:.2e}); "
           f"strict positivity on all {n_strict} domains with d0 > 0.05")


def test_criterion_05_quadratic_stability_scaling(sweep_rows):
    by = {}
    for r in sweep_rows:
        by.setdefault(r.k, {})[r.amplitude] = r
    ratios = {k: amps[0.05].deficit / amps[0.025].deficit for k, amps in by.items()}
    in_band = all(3.6 <= v <= 4.4 for v in ratios.values())
    min_const = min(r.deficit / r.d_star_sq for r in sweep_rows if r.amplitude == 0.05)
    ok = in_band and min_const > 0.0
    report(5, ok,
           f"deficit(t)/deficit(t/2) in [3.6, 4.4] for k=2..6 "
           f"(range {min(ratios.values()):.2f}-{max(ratios.values()):.2f}); "
           f"min_k deficit/d_star_sq = {min_const:.3f} > 0")


def test_criterion_06_key_estimate_nested(params):
    c_vals = []
    for i in range(10):
        inner = StarDomain(r0=0.80 + 0.02 * i)
        rep = key_estimate_check(inner, StarDomain(), h=0.02, p=params)
        worst = max(rep.lhs_abs, rep.lhs_mean) / rep.rhs
        c_vals.append(worst)
        assert rep.monotone
    ok = all(c < 10.0 for c in c_vals)
    report(6, ok,
           f"10 concentric pairs: C_emp in [{min(c_vals):.3f}, {max(c_vals):.3f}], "
           f"all < 10; inequality holds for both test functions on every pair")


def test_criterion_07_free_boundary_residual(
    disk_state_h02, wobble_a2_state, selection_runs, params
):
    p_run = EnergyParams(tau=0.01)

    def cv_of(state, p):
        traces = flux_traces(state.system, state.spectral, state.torsion)
        return fb_residual(state.domain, traces, p).cv

    cv_disk = cv_of(disk_state_h02, params)
    min_state = run_pipeline(selection_runs["a2"].minimizer, p_run, 0.02)
    cv_min = cv_of(min_state, p_run)
    cv_bad = cv_of(wobble_a2_state, params)
    ok = cv_disk < 0.02 and cv_min < 0.05 and cv_bad > 0.10
    report(7, ok,
           f"cv(disk)={cv_disk:.2%} < 2%; cv(converged minimizer)={cv_min:.2%} < 5%; "
           f"cv(non-minimizer)={cv_bad:.2%} > 10%")


def test_criterion_08_selection_principle(selection_runs):
    """Both comparison verdicts for the two seeds at tau = 0.01.

    The deficit comparison follows from monotone descent and passes. The
    distance-retention verdict requires the penalty wall tau*(sqrt(2)-1)*c
    to outweigh the energy drop (deficit/d_j^2)*c between the seed distance
    and the ball; the measured seed stiffness makes that impossible below
    tau ~ 4*deficit/d_j^2 (recorded per run as retention_tau_lower_bound,
    about 16 here), so at tau = 0.01 the minimizer collapses to the ball
    and this criterion fails. The run metadata records the analysis.
    """
    details = []
    ok = True
    for key in ("a2", "a3"):
        run = selection_runs[key]
        ok = ok and run.verdict_deficit and run.verdict_distance
        details.append(
            f"{key}: A={'PASS' if run.verdict_deficit else 'FAIL'} "
            f"B={'PASS' if run.verdict_distance else 'FAIL'} "
            f"(d_j={run.d_j:.3f}, d*(V)={run.d_star_min:.4f}, "
            f"needs tau>={run.metadata['retention_tau_lower_bound']:.1f})"
        )
    runtime = selection_runs["seconds"]
    ok = ok and runtime < 1800.0
    report(8, ok, "; ".join(details) + f"; runtime {runtime:.0f}s < 1800s")


def test_criterion_09_volume_constraint(renormalize_run, penalized_run, params):
    area_err = abs(penalized_run["final"].report.vol - params.v)
    lam_r = renormalize_run["final"].report.lambda1
    lam_p = penalized_run["final"].report.lambda1
    lam_gap = abs(lam_p - lam_r) / lam_r
    ok = area_err < 1e-3 and lam_gap < 5e-3
    report(9, ok,
           f"penalized-track area error {area_err:.1e} < 1e-3; "
           f"track lambda1 agreement {lam_gap:.1e} < 5e-3 relative")


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "wobble.cfg"
    cfg.write_text(WOBBLE_CFG)
    args = ["energy", "--domain", str(cfg), "--h", "0.04", "--seed", "11"]
    blobs = []
    for sub in ("one", "two"):
        assert main(args + ["--outdir", str(tmp_path / sub)]) == 0
        blobs.append((tmp_path / sub / "energy.csv").read_bytes())
    ok = blobs[0] == blobs[1]
    report(10, ok,
           "identical config + seed give byte-identical CSVs; module property "
           "suites run in this same session")
