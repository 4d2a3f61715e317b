"""Shared fixtures: expensive pipeline runs are session-scoped and reused."""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fkstab.cli import random_domain
from fkstab.energy import EnergyParams, run_pipeline
from fkstab.geometry import StarDomain
from fkstab.optimizer import (
    OptimizerConfig,
    SelectionRun,
    discretization_floor,
    minimize,
    selection_step,
    stability_sweep,
)


@pytest.fixture(scope="session")
def params() -> EnergyParams:
    return EnergyParams()


@pytest.fixture(scope="session")
def disk() -> StarDomain:
    return StarDomain()


@pytest.fixture(scope="session")
def disk_state_h02(disk, params):
    return run_pipeline(disk, params, 0.02)


@pytest.fixture(scope="session")
def disk_state_h04(disk, params):
    return run_pipeline(disk, params, 0.04)


@dataclass
class TimedState:
    state: object
    seconds: float


@pytest.fixture(scope="session")
def disk_state_h01_timed(disk, params) -> TimedState:
    t0 = time.perf_counter()
    state = run_pipeline(disk, params, 0.01)
    return TimedState(state, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def wobble_a2_state(params):
    dom = StarDomain(modes=((2, 0.1, 0.0),)).renormalized_to_area(params.v)
    return run_pipeline(dom, params, 0.02)


@pytest.fixture(scope="session")
def fk_sweep(params):
    """100 random volume-renormalized domains solved against the meshed ball."""
    h = 0.02
    rng = np.random.default_rng(42)
    floor = discretization_floor(params, h)
    ball_rep = floor.ball_state.report
    rows = []
    for _ in range(100):
        dom = random_domain(rng, params.v)
        state = run_pipeline(dom, params, h)
        rows.append(
            {
                "lambda1": state.report.lambda1,
                "lambda1_ball": ball_rep.lambda1,
                "E_base": state.report.E_base,
                "E_ball": ball_rep.E_base,
                "d0": state.report.d_report.d0,
                "d1": state.report.d_report.d1,
                "asym": state.report.d_report.asym,
                "d_star_sq": state.report.d_report.d_star_sq,
            }
        )
    return {"rows": rows, "floor": floor}


@pytest.fixture(scope="session")
def sweep_rows(params):
    return stability_sweep([2, 3, 4, 5, 6], [0.05, 0.025], params, h=0.02)


@pytest.fixture(scope="session")
def gradient_rows(params):
    """10 random fields × 5 random domains checked against central differences."""
    from fkstab.cli import gradient_check_rows

    t0 = time.perf_counter()
    rows = gradient_check_rows(5, 10, 0.03, seed=7, fd_step=1e-3, p=params)
    return {"rows": rows, "seconds": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def opt_config() -> OptimizerConfig:
    return OptimizerConfig(max_iter=30, fine_iters=6)


@pytest.fixture(scope="session")
def renormalize_run(params, opt_config):
    start = StarDomain(modes=((2, 0.1, 0.0),))
    dom, trace = minimize(start, params, opt_config)
    final = run_pipeline(dom, params, opt_config.h_fine)
    return {"domain": dom, "trace": trace, "final": final}


@pytest.fixture(scope="session")
def penalized_run(params, opt_config):
    start = StarDomain(r0=np.sqrt(1.2), modes=((2, 0.1, 0.0),))
    cfg = replace(opt_config, volume_handling="penalized")
    dom, trace = minimize(start, params, cfg)
    final = run_pipeline(dom, params, cfg.h_fine)
    return {"domain": dom, "trace": trace, "final": final}


@pytest.fixture(scope="session")
def selection_runs(opt_config) -> dict[str, SelectionRun]:
    p = EnergyParams(tau=0.01)
    t0 = time.perf_counter()
    runs = {
        "a2": selection_step(StarDomain(modes=((2, 0.08, 0.0),)), p, opt_config),
        "a3": selection_step(StarDomain(modes=((3, 0.06, 0.0),)), p, opt_config),
    }
    runs["seconds"] = time.perf_counter() - t0
    return runs
