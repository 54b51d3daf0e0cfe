"""Target-only MISE convergence slope across sample sizes."""
import argparse
import os
from pathlib import Path

from inpr.simlab import SimSetting, run_rate_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/rate")
    ap.add_argument("--ns", default="100,200,400,800,1600")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=int(os.environ.get("INPR_THREADS", "1")))
    args = ap.parse_args()

    report, slope = run_rate_experiment(
        SimSetting(dim=1),
        ns=tuple(int(n) for n in args.ns.split(",")),
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "report.csv")
    for row in report.rows:
        print(f"n={row.n0:<6d} mise={row.value:.5f} se={row.mc_stderr:.5f}")
    print(f"log-log slope: {slope:.4f}")
    print(f"written: {out / 'report.csv'}")


if __name__ == "__main__":
    main()
