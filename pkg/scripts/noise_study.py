"""Readout-noise study: variance formula check and distinguishable states.

Runs the Monte Carlo sweep that validates the closed-form matchline
variance at several mismatch ratios, prints the 3-sigma distinguishable
state count for a range of capacitor spreads, and writes the sweep CSV.
"""
from __future__ import annotations

import argparse
from pathlib import Path

from chargecam.array_model import (
    CURRENT_DOMAIN_SIGMA,
    CURRENT_DOMAIN_STATES,
    distinguishable_states,
)
from chargecam.evaluation import sweep_noise, sweep_to_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/noise_sweep.csv")
    ap.add_argument("--seed", type=int, default=2025)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--sigma", default="0.001,0.014,0.025,0.028",
                    help="comma-separated sigma/mu values")
    ap.add_argument("--nmis", default="32,64,128,192,224",
                    help="comma-separated mismatch counts")
    args = ap.parse_args()

    sigmas = [float(s) for s in args.sigma.split(",")]
    nmis = [int(s) for s in args.nmis.split(",")]

    print("distinguishable states under the 3-sigma separation rule:")
    for sigma in sigmas:
        states = distinguishable_states(sigma)
        label = "unbounded" if states == float("inf") else f"{int(states)}"
        print(f"  sigma/mu = {sigma:.3%}  ->  {label}")
    print(f"  current-domain emulation point: sigma/mu = "
          f"{CURRENT_DOMAIN_SIGMA:.3%}  ->  {CURRENT_DOMAIN_STATES}")

    print(f"[sweep] {len(sigmas)} sigma x {len(nmis)} n_mis, "
          f"{args.trials} trials each, seed {args.seed}")
    rows = sweep_noise(sigmas, nmis, trials=args.trials, seed=args.seed)
    worst = max(rows, key=lambda r: r.rel_err)
    print(f"[sweep] worst relative error {worst.rel_err:.4f} at "
          f"sigma/mu={worst.sigma_over_mu} n_mis={worst.n_mis}")

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(sweep_to_csv(rows))
    print(f"[out] {out_path}")


if __name__ == "__main__":
    main()
