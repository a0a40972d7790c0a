"""sigma(mu, t) for the oracle densities: converged LP lower bound, 6 sup-shift-TV upper bound, shift TV."""

from gaussreg.harness.inequalities import GRID_T
from gaussreg.measures import DENSITIES, tv_shift_oracle_1d
from gaussreg.smoothness import sigma_lower_converged, sigma_upper


def main() -> None:
    print(f"{'density':8s} {'t':>5} {'TV(2t)':>9} {'sigma_lo':>9} {'sigma_hi':>9} {'cells':>6}")
    for dens in DENSITIES:
        for t in GRID_T:
            lo = sigma_lower_converged(dens, t)
            hi = sigma_upper(dens, t)
            tv = tv_shift_oracle_1d(dens, 2 * t)
            print(f"{dens:8s} {t:5.2f} {tv:9.5f} {lo.lower:9.5f} {hi:9.5f} {lo.cells:6d}")


if __name__ == "__main__":
    main()
