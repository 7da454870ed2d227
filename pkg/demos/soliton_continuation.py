"""Continue the c = 1 solitary wave from the Benjamin-Ono case down in alpha.

Prints maximum, L2 norm and energy along the path. The default grid is
small so this runs in well under a minute; larger n sharpens the values
near alpha = 0.5.

Run: python3 demos/soliton_continuation.py [--alpha 0.6] [--n 16384]
"""

import argparse

import numpy as np

from dispersive_burgers import continue_in_alpha, make_grid
from dispersive_burgers import spectral as sp
from dispersive_burgers.evolution import ModelSpec, hamiltonian


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=0.6)
    ap.add_argument("--n", type=int, default=2**14)
    ap.add_argument("--w", type=float, default=100.0)
    args = ap.parse_args()

    g = make_grid(args.n, args.w)
    print(f"{'alpha':>6} {'max':>9} {'l2 norm':>9} {'energy':>10} {'residual':>9}")

    def show(prof):
        e = hamiltonian(ModelSpec.fkdv(prof.alpha), prof.values)
        print(f"{prof.alpha:6.2f} {np.max(prof.values.physical):9.4f} {sp.l2_norm(prof.values):9.4f} "
              f"{e:10.5f} {prof.residual_norm:9.1e}")

    continue_in_alpha(args.alpha, grid=g, callback=show)


if __name__ == "__main__":
    main()
