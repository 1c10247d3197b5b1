"""Jain fairness of K*-RUS and K*-LUS over transmit power, with and without estimation error."""

import argparse
from pathlib import Path

from kstarsel.core import SystemConfig
from kstarsel.sim import fairness
from kstarsel.tables import ResultTable


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--powers", type=float, nargs="+", default=[10, 15, 20, 25, 30, 35, 40])
    ap.add_argument("--rhos", type=float, nargs="+", default=[0.0, 0.1])
    ap.add_argument("--windows", type=int, default=100)
    ap.add_argument("--slots", type=int, default=100)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("results/fairness_vs_power.csv"))
    args = ap.parse_args()

    cols = ["rho", "power_dbm", "scheme", "k_star", "jfi", "jfi_std", "jfi_realized"]
    units = {"rho": "1", "power_dbm": "dBm", "scheme": "-", "k_star": "users", "jfi": "1",
             "jfi_std": "1", "jfi_realized": "1"}
    table = ResultTable(cols, units, meta={"windows": args.windows, "slots_per_window": args.slots})
    for rho in args.rhos:
        for p in args.powers:
            cfg = SystemConfig(est_error=rho, tx_power_dbm=p)
            for scheme in ("kstar-rus", "kstar-lus"):
                rep = fairness(cfg, scheme, args.windows, args.slots, threads=args.threads)
                table.add(rho=rho, power_dbm=p, scheme=scheme, k_star=rep.K, jfi=rep.jfi,
                          jfi_std=rep.jfi_std, jfi_realized=rep.jfi_realized)
                print(f"rho={rho} P={p:>4} {scheme}: K*={rep.K:.0f} JFI={rep.jfi:.4f}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(table.to_csv())
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
