#!/usr/bin/env python3
"""Print the headline analytic numbers for a chosen working point."""

import argparse

import numpy as np

from spinsqueeze.analytics import (noncondensed_fraction, t_best,
                                   universal_squeezing_limit, xi2_min)
from spinsqueeze.model import derive_params

parser = argparse.ArgumentParser()
parser.add_argument("--s", type=float, default=1.32e-2, help="sqrt(rho a^3)")
parser.add_argument("--theta", type=float, default=0.5, help="k_B T / rho g")
args = parser.parse_args()

p = derive_params(args.s, args.theta, n_atoms=10 ** 6)
xq = xi2_min(p, "continuum", "quantum")
xc = xi2_min(p, "continuum", "classical") if args.theta > 0 else 0.0
print(f"working point: sqrt(rho a^3) = {args.s:g}, k_B T/rho g = {args.theta:g}")
print(f"  squeezing limit (quantum)     xi2_min = {xq:.4e}  ({xq / args.s:.4f} x sqrt(rho a^3))")
print(f"  squeezing limit (classical)   xi2_min = {xc:.4e}")
print(f"  non-condensed fraction (q/c)  {noncondensed_fraction(p, 'quantum'):.4f} / "
      f"{noncondensed_fraction(p, 'classical') if args.theta > 0 else 0.0:.4f}")
if xq > 0:
    print(f"  close-to-best time (eta=0.2)  rho g t/hbar = {p.mu * t_best(0.2, xq, p.mu):.1f}")
print(f"  universal F(theta) quantum    {universal_squeezing_limit(args.theta, 'quantum'):.4f}")
