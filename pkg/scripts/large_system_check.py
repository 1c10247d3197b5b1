"""Monte Carlo mean of the power factor and error quadratic form against their large-system limits."""

import argparse

from kstarsel.core import SystemConfig
from kstarsel.rmt import validate_large_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--antennas", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--rho", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=2000)
    args = ap.parse_args()
    print(f"{'M':>5} {'K':>4} {'gamma2 err':>11} {'quadform err':>13}")
    for M in args.antennas:
        cfg = SystemConfig(num_antennas=M, num_candidates=M, est_error=args.rho, corr_coef=args.delta)
        rep = validate_large_system(cfg, M // 4, args.trials)
        print(f"{M:>5} {rep.K:>4} {rep.rel_err_gamma_sq:>11.5f} {rep.rel_err_quadform:>13.5f}")


if __name__ == "__main__":
    main()
