#!/usr/bin/env python3
"""Eigenvalue deficit vs distance-squared over cosine boundary modes.

Writes out/sweep.csv and prints the empirical stability constant
min_k deficit / d_star_sq together with the quadratic amplitude scaling.
"""

from pathlib import Path

from fkstab.cli import main as cli_main


def main():
    out = Path("out")
    out.mkdir(exist_ok=True)
    rc = cli_main([
        "stability-sweep", "--kmin", "2", "--kmax", "6",
        "--amplitudes", "0.05,0.025", "--h", "0.02",
        "--outdir", str(out), "--plot-script",
    ])
    if rc == 0:
        print(f"wrote {out / 'sweep.csv'} and {out / 'sweep.plt'}")
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
