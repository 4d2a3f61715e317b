#!/usr/bin/env python3
"""Selection runs for the two reference seeds, with comparison verdicts.

Each run pins the nonlinearity valley at the seed distance (c = d_j²),
minimizes F = E + tau·h from the seed, and reports the deficit and
distance-retention comparisons plus the penalty weight a retention would
need (recorded as retention_tau_lower_bound).
"""

from fkstab.energy import EnergyParams
from fkstab.geometry import StarDomain
from fkstab.optimizer import OptimizerConfig, selection_step

SEEDS = {
    "a2=0.08": StarDomain(modes=((2, 0.08, 0.0),)),
    "a3=0.06": StarDomain(modes=((3, 0.06, 0.0),)),
}


def main():
    p = EnergyParams(tau=0.01)
    cfg = OptimizerConfig(max_iter=30, fine_iters=6)
    for name, seed in SEEDS.items():
        run = selection_step(seed, p, cfg)
        print(f"seed {name}: d_j = {run.d_j:.4f}, d*(V) = {run.d_star_min:.5f}, "
              f"deficits {run.deficit_seed:.5f} -> {run.deficit_min:.2e}")
        print(f"  verdict A (deficit):  {'PASS' if run.verdict_deficit else 'FAIL'}")
        print(f"  verdict B (distance): {'PASS' if run.verdict_distance else 'FAIL'} "
              f"(retention needs tau >= {run.metadata['retention_tau_lower_bound']:.1f}; "
              f"run used tau = {run.tau})")


if __name__ == "__main__":
    main()
