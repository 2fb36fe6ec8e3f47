"""Field and reversal-distance sweeps of one spin with the rate model switched on.

Each scan is fitted to f1 (1 - f2 exp(-f3 t)); f3 is then fitted against the gap
(exponential decay, gaps above 1 only) and against A(s_r) (power law).
"""

import csv

from _common import parser

from revanneal.errors import FitError
from revanneal.fitting import fit_exp_decay, fit_power_law, fit_saturating_exp
from revanneal.scans import ScanConfig, make_grid, sweep_h1, sweep_sr

H1 = (0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6)
SR = (0.60, 0.625, 0.65, 0.675, 0.70, 0.725, 0.75)


def f3_of(point):
    r = point.result
    ground = "down" if point.result.config.load_problem().h[0] > 0 else "up"
    try:
        return fit_saturating_exp(list(zip(r.t_end, r.column(ground, sampled=True)))).f3
    except FitError:
        return float("nan")


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = tuple(make_grid("WTS", args.points))
    base = dict(mode="WTS", t_grid=grid, initial_state="up", rate_model=True,
                samples_per_point=5000, seed=args.seed)

    rows = [(p.value, p.gap, p.A_sr, f3_of(p))
            for p in sweep_h1(ScanConfig(problem="1S(0.1)", **base), H1)]
    rows += [(p.value, p.gap, p.A_sr, f3_of(p))
             for p in sweep_sr(ScanConfig(problem="1S(0.3)", **base), SR)]
    with open(args.out / "sweeps_f3.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "value", "gap", "A_sr", "f3"])
        for i, row in enumerate(rows):
            w.writerow(["h1" if i < len(H1) else "s_r", *row])

    gap_pts = [(g, f) for _, g, _, f in rows[:len(H1)] if f > 0]
    amp_pts = [(a, f) for _, _, a, f in rows[len(H1):] if f > 0]
    e = fit_exp_decay(gap_pts)
    p = fit_power_law(amp_pts)
    print(f"f3 vs gap:    {e.a:.4g} exp(-{e.b:.4g} gap)  ({len(e.excluded)} points with gap <= 1)")
    print(f"f3 vs A(s_r): {p.a:.4g} A^{p.b:.4g}")


if __name__ == "__main__":
    main()
