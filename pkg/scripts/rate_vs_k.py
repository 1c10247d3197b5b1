"""Approximate and simulated sum rate against the number of active users.

Writes one row per K with the RUS/LUS approximations, their closed-form
special cases (perfect CSI, no correlation) and Monte Carlo means.
"""

import argparse
import math
from pathlib import Path

from kstarsel.core import SystemConfig
from kstarsel.rate_approx import approx_rate_lus, approx_rate_rus, approx_rate_special
from kstarsel.selection import solve_kstar
from kstarsel.sim import ergodic_rate
from kstarsel.tables import ResultTable

RATE = "bit/s/Hz"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--power", type=float, default=30.0, help="transmit power in dBm")
    ap.add_argument("--rho", type=float, default=0.0)
    ap.add_argument("--delta", type=float, default=0.0)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("results/rate_vs_k.csv"))
    args = ap.parse_args()

    cfg = SystemConfig(tx_power_dbm=args.power, est_error=args.rho, corr_coef=args.delta)
    special = args.rho == 0 and args.delta == 0
    cols = ["K", "rus_approx", "lus_approx", "rus_special", "lus_special", "rus_sim", "rus_ci95",
            "lus_sim", "lus_ci95"]
    units = dict.fromkeys(cols, RATE)
    units["K"] = "users"
    table = ResultTable(cols, units, meta={"fingerprint": cfg.fingerprint(), "trials": args.trials})
    for K in range(1, cfg.num_antennas):
        rus = ergodic_rate(cfg, "rus", K=K, trials=args.trials, threads=args.threads)
        lus = ergodic_rate(cfg, "lus", K=K, trials=args.trials, threads=args.threads)
        table.add(K=K, rus_approx=approx_rate_rus(cfg, K).value,
                  lus_approx=approx_rate_lus(cfg, K).value,
                  rus_special=approx_rate_special(cfg, K, "RUS").value if special else math.nan,
                  lus_special=approx_rate_special(cfg, K, "LUS").value if special else math.nan,
                  rus_sim=rus.mean, rus_ci95=rus.ci95, lus_sim=lus.mean, lus_ci95=lus.ci95)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(table.to_csv())
    print(f"K*_RUS = {solve_kstar(cfg, 'RUS').k_star}, K*_LUS = {solve_kstar(cfg, 'LUS').k_star}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
