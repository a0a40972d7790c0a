"""Print TV_n, KR_n and the fitted composite bound along each built-in sequence."""

import argparse

from gaussreg.harness.checks import BoundCheck
from gaussreg.harness.runner import batch_for
from gaussreg.harness.sequences import SEQUENCE_N, sequence_demo, sequences


def main() -> None:
    ap = argparse.ArgumentParser(formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("--n", type=float, default=2e5, help="Monte Carlo sample count")
    ap.add_argument("--seed", type=int, default=1, help="seed")
    args = ap.parse_args()

    batch = batch_for("sequence_d2", 2, int(args.n), args.seed)
    for name, seq in sequences().items():
        if name == "constant_x1":
            continue
        p = 2.0 if seq.limit.dim_out == 1 else 10.0
        rows = [r for r in sequence_demo(seq, batch, p) if isinstance(r, BoundCheck) and r.name.endswith(":bound")]
        print(f"\n{name} (p={p:g}, limit {seq.limit.name})")
        print(f"{'n':>4} {'TV_n':>9} {'KR_n':>9} {'delta':>6} {'bound':>9}  verdict")
        for n, r in zip(SEQUENCE_N, rows):
            print(f"{n:>4} {r.lhs:9.5f} {r.params['kr']:9.5f} {r.params['delta']:6.3f} {r.rhs:9.5f}  {r.verdict}")


if __name__ == "__main__":
    main()
