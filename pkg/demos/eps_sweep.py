"""Blow-up time against the size epsilon of small initial data, with a log-log fit.

For the epsilon-scaled fKdV equation the stop time scales exactly like
1/epsilon, so the fitted slope is -1. A coarse grid keeps the run short.

Run: python3 demos/eps_sweep.py [--out runs]
"""

import argparse

from dispersive_burgers import lab
from dispersive_burgers.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()

    base = ExperimentConfig(model="fkdv", alpha=0.5, beta=3.0, n=256, w=5.0, dt=2e-3, t_end=4.0,
                            tstar_rule="divergence", newton_max_iter=400, task="sweep",
                            name="demo-sweep")
    res = lab.run_sweep(lab.SweepSpec(base, (0.05, 0.1, 0.2)), out=args.out)
    for e, t in zip(res.eps, res.t_star):
        print(f"eps={e:5.2f}  t*={t:8.3f}")
    r = res.regression
    print(f"log10 t* = {r.a:.4f} log10 eps + {r.b:.4f}  (sigma_a={r.sigma_a:.1e}, r={r.r:.6f})")


if __name__ == "__main__":
    main()
