"""Equilibrium ferromagnetic chains: sampled mean energies and the fitted temperature."""

from _common import parser

from revanneal.equilibrium import beta_to_temperature, fit_beta_to_energies
from revanneal.scans import chain_equilibrium_sweep, chain_rows_csv

SIZES = (10, 20, 50, 100, 500, 1000)


def main():
    ap = parser(__doc__)
    ap.add_argument("--beta", type=float, default=7.64)
    ap.add_argument("--J", type=float, default=-0.1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rows = chain_equilibrium_sweep(SIZES, args.J, args.beta, 5000, args.seed)
    (args.out / "chain_sweep.csv").write_text(chain_rows_csv(rows))
    for r in rows:
        print(f"N={r.n:<5d} p0={r.p0_exact:.4f} (sampled {r.p0_sampled:.4f}) "
              f"E={r.energy_exact:.3f} (sampled {r.energy_sampled:.3f})")
    beta = fit_beta_to_energies([(r.n, r.energy_sampled) for r in rows], args.J)
    print(f"fitted beta = {beta:.4f}, T = {beta_to_temperature(beta):.2f} mK")


if __name__ == "__main__":
    main()
