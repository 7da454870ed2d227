"""L2-critical blow-up of fKdV (alpha = 1/2, u0 = 3 sech^2) and the norm fits.

Runs the registered preset, then fits ln||u||_inf and ln||u_x||^2 against
ln(t* - t). The desk scale takes several minutes on one core.

Run: python3 demos/critical_blowup.py [--scale desk|full] [--out runs]
"""

import argparse

from dispersive_burgers import lab
from dispersive_burgers.analysis import predicted_exponents


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", default="desk", choices=("desk", "full"))
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()

    res = lab.run_experiment("fkdv-critical-blowup", scale=args.scale, out=args.out)
    d = res.diagnostics
    print(f"stopped at t={d.stop_time:.4f} ({d.stop_reason})")
    pred = predicted_exponents(0.5, "critical", gamma=1.0)
    for key, expect in (("sup_norm", pred.exponent_sup), ("grad_l2_sq", pred.exponent_grad_l2_sq)):
        fit = res.fits[key]
        if "error" in fit:
            print(f"{key}: fit failed, {fit['error']}")
            continue
        print(f"{key}: t*={fit['t_star']:.4f}  kappa1={fit['kappa1']:.4f} (scaling law -{expect:g})"
              f"  kappa2={fit['kappa2']:.4f}")
    print(f"artifacts in {args.out}/fkdv-critical-blowup")


if __name__ == "__main__":
    main()
