"""Waiting-time scans with the four-level Markov model: 2S1 and the 2-SAT instances."""

from _common import parser, summarize

from revanneal.scans import ScanConfig, make_grid, run_scan, write_scan

RUNS = (("2S1", "wts_2s1_ms", "uu"), ("sat6", "wts_sat6_ms", "gs1"),
        ("sat12", "wts_sat12_ms", "gs1"), ("sat14", "wts_sat14_ms", "gs1"))


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = tuple(make_grid("WTS", args.points))
    for problem, rates, init in RUNS:
        cfg = ScanConfig(mode="WTS", t_grid=grid, problem=problem, backend="markov",
                         rates=rates, initial_state=init, seed=args.seed)
        res = run_scan(cfg)
        write_scan(res, args.out / f"{problem}_wts_markov.csv")
        summarize(f"{problem} WTS", res)


if __name__ == "__main__":
    main()
