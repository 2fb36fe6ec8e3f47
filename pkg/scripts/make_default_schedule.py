"""Regenerate the shipped default schedule table and its fitted coefficients.

The table is a representative Advantage-generation shape: A(0)/h = 5.5 GHz, a
transverse field that has dropped to about 0.23 GHz at s = 0.7, and B(1)/h chosen
so that h B(1) / (2 k_B) = 0.206 K. Replace it with a vendor table through
``revanneal schedule-fit`` when one is available.
"""

from pathlib import Path

import numpy as np

from revanneal.schedule import (
    CSV_HEADER, fit_schedule, read_schedule_csv, save_schedule_json,
)

DATA = Path(__file__).resolve().parents[1] / "src" / "revanneal" / "data"

A_EXP = (1.70474809, -0.61521774, -3.38358342, 0.29405307)
B_POLY = (0.2, 3.0, 5.38468708)


def main():
    s = np.round(np.linspace(0.0, 1.0, 101), 2)
    a = (1 - s) * np.exp(np.polyval(A_EXP[::-1], s))
    b = np.polyval(B_POLY[::-1], s)
    lines = [",".join(CSV_HEADER)]
    lines += [f"{si:.2f},{ai:.6g},{bi:.6g}" for si, ai, bi in zip(s, a, b)]
    csv_path = DATA / "default_schedule.csv"
    csv_path.write_text("\n".join(lines) + "\n")

    sched = fit_schedule(read_schedule_csv(csv_path))
    save_schedule_json(sched, DATA / "default_schedule.json")
    print(f"residual_A={sched.residual_A:.2e} residual_B={sched.residual_B:.2e} eta={sched.eta:.5f}")


if __name__ == "__main__":
    main()
