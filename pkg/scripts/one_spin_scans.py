"""Waiting-time and annealing-time scans of one spin with the Bloch backend.

Runs h1 = 0.1 from both initial states, then h1 = 0 against the slightly
lifted h1 = 0.001, and fits the saturating exponential to the ground state.
"""

from _common import parser, summarize

from revanneal.fitting import count_extrema, fit_saturating_exp
from revanneal.scans import ScanConfig, make_grid, run_scan, write_scan


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for mode in ("WTS", "ATS"):
        grid = tuple(make_grid(mode, args.points, start=2.0))
        for init in ("down", "up"):
            cfg = ScanConfig(mode=mode, t_grid=grid, problem="1S(0.1)", initial_state=init,
                             bloch=mode.lower(), seed=args.seed)
            res = run_scan(cfg)
            write_scan(res, args.out / f"1s_h0.1_{mode.lower()}_{init}.csv")
            summarize(f"1S(0.1) {mode} from {init}", res)
            fit = fit_saturating_exp(list(zip(res.t_end, res.column("down", sampled=True))))
            print(f"{'':<22s} fit: f1={fit.f1:.3f} f2={fit.f2:.3f} f3={fit.f3:.3g}")

    grid = tuple(make_grid("WTS", args.points))
    for h in ("0", "0.001"):
        cfg = ScanConfig(mode="WTS", t_grid=grid, problem=f"1S({h})", initial_state="up",
                         bloch="lifted", seed=args.seed)
        res = run_scan(cfg)
        write_scan(res, args.out / f"1s_h{h}_wts_up.csv")
        print(f"1S({h}) WTS: {count_extrema(res.column('up'))} interior extrema in p_up")


if __name__ == "__main__":
    main()
