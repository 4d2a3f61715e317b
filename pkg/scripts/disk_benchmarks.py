#!/usr/bin/env python3
"""Disk benchmarks: eigenvalues, torsion, and boundary flux vs closed forms."""

import math

from scipy.special import jn_zeros

from fkstab.elliptic import flux_traces, solve_spectrum, solve_torsion
from fkstab.geometry import StarDomain
from fkstab.mesh import assemble, triangulate

J0 = float(jn_zeros(0, 1)[0])
J1 = float(jn_zeros(1, 1)[0])


def main():
    print(f"{'h':>6} {'lambda1':>10} {'rel_err':>9} {'lambda2':>10} {'rel_err':>9} "
          f"{'tor':>10} {'rel_err':>9} {'flux_cv':>8}")
    for h in (0.04, 0.02, 0.01):
        sys = assemble(triangulate(StarDomain(), h))
        spec = solve_spectrum(sys)
        tor = solve_torsion(sys)
        traces = flux_traces(sys, spec, tor)
        cv = traces.u_normal.std() / traces.u_normal.mean()
        print(f"{h:6.3f} {spec.lambda1:10.6f} {abs(spec.lambda1 - J0**2) / J0**2:9.2e} "
              f"{spec.lambda2:10.6f} {abs(spec.lambda2 - J1**2) / J1**2:9.2e} "
              f"{tor.tor:10.6f} {abs(tor.tor + math.pi / 16) / (math.pi / 16):9.2e} "
              f"{cv:8.2%}")
    print(f"references: lambda1 = {J0**2:.6f}, lambda2 = {J1**2:.6f}, tor = {-math.pi/16:.6f}")


if __name__ == "__main__":
    main()
