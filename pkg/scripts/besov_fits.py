"""Fitted L1 shift exponents of the oracle densities and of catalog maps, next to predicted orders."""

import argparse

import numpy as np

from gaussreg.gaussian_space import GaussianSpace, sample
from gaussreg.harness.scaling import BESOV_GRIDS
from gaussreg.harness.suites import BESOV_PAIRS
from gaussreg.measures import pushforward
from gaussreg.smooth_maps import get_map
from gaussreg.smoothness import besov_alpha, besov_fit, geometric_grid


def main() -> None:
    ap = argparse.ArgumentParser(formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("--n", type=float, default=1e6, help="Monte Carlo sample count")
    ap.add_argument("--seed", type=int, default=1, help="seed")
    args = ap.parse_args()

    print("oracle densities (quadrature)")
    for dens, span in BESOV_GRIDS.items():
        fit = besov_fit(dens, geometric_grid(*span))
        print(f"  {dens:8s} alpha {fit.alpha_hat:.4f}  r2 {fit.r_squared:.5f}")

    print("pushforward laws (histograms)")
    grid = geometric_grid(0.02, 0.7)
    for name, pairs in BESOV_PAIRS.items():
        spec = get_map(name)
        mu = pushforward(spec, sample(GaussianSpace(spec.dim_in), int(args.n), args.seed, 0))
        alphas = []
        for j in range(spec.dim_out):
            e = np.zeros(spec.dim_out)
            e[j] = 1.0
            alphas.append(besov_fit(mu, grid, direction=e).alpha_hat)
        preds = ", ".join(f"p={p:g},theta={t:g}: {besov_alpha(p, t, spec.dim_out):.4f}" for p, t in pairs)
        print(f"  {name:8s} alpha {min(alphas):.4f}  predicted {preds}")


if __name__ == "__main__":
    main()
