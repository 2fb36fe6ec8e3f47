"""Annealing-time scans of the three two-spin instances with the Lindblad backend.

Uses the per-ms rate presets, which put relaxation on the 100 us to ms scale
of the scan window; 2S2 is run with its degeneracy lifted by 0.001.
"""

import numpy as np
from _common import parser, summarize

from revanneal.equilibrium import state_probs
from revanneal.problems import builtin
from revanneal.scans import ScanConfig, run_scan, write_scan

BETA = 6.93


def main():
    ap = parser(__doc__)
    ap.add_argument("--tau", type=float, default=1e-2, help="time step in us")
    ap.add_argument("--unit", choices=["ms", "us"], default="ms", help="rate preset family")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    grid = tuple(np.geomspace(2.0, 2000.0, args.points))
    suffix = "_ms" if args.unit == "ms" else ""
    for name, lift in (("2S1", 0.0), ("2S2", 0.001), ("2S3", 0.0)):
        cfg = ScanConfig(mode="ATS", t_grid=grid, problem=name, backend="lindblad2",
                         rates=f"ats_{name.lower()}{suffix}", initial_state="uu",
                         tau=args.tau, degeneracy_lift=lift, seed=args.seed)
        res = run_scan(cfg)
        write_scan(res, args.out / f"{name.lower()}_ats_lindblad.csv")
        summarize(f"{name} ATS", res)
        gibbs = state_probs(builtin(name), BETA)
        print(f"{'':<22s} Gibbs:  " + ", ".join(f"{k}={v:.3f}" for k, v in zip(res.labels, gibbs)))


if __name__ == "__main__":
    main()
