#!/usr/bin/env python3
"""First-variation check: boundary-quadrature derivatives vs central differences."""

from pathlib import Path

from fkstab.cli import main as cli_main


def main():
    out = Path("out")
    out.mkdir(exist_ok=True)
    rc = cli_main([
        "hadamard-check", "--seed", "7", "--fields", "10", "--domains", "5",
        "--h", "0.03", "--outdir", str(out),
    ])
    if rc == 0:
        print(f"wrote {out / 'hadamard.csv'}")
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
