"""Generate the shipped 2-SAT instances with exactly four satisfying assignments.

Targets are {x, x^A, x^B, x^A^B} for disjoint flip masks A and B. That set is
closed under bitwise majority, so it is exactly the solution set of the
2-clauses it satisfies; random such clauses are added until only the targets
remain satisfying.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from revanneal.problems import TwoSatInstance, write_2sat

DATA = Path(__file__).resolve().parents[1] / "src" / "revanneal" / "data" / "twosat"
SPECS = {"sat6": (6, 1, 2), "sat12": (12, 2, 3), "sat14": (14, 3, 4)}


def all_assignments(n):
    idx = np.arange(2**n)[:, None]
    return ((idx >> np.arange(n)[None, :]) & 1).astype(bool)


def satisfied(assign, clause):
    (i, e1), (j, e2) = clause
    a = assign[..., i - 1] if e1 > 0 else ~assign[..., i - 1]
    b = assign[..., j - 1] if e2 > 0 else ~assign[..., j - 1]
    return a | b


def make_instance(n, size_a, size_b, rng):
    x = rng.random(n) < 0.5
    perm = rng.permutation(n)
    mask_a = np.zeros(n, bool)
    mask_a[perm[:size_a]] = True
    mask_b = np.zeros(n, bool)
    mask_b[perm[size_a:size_a + size_b]] = True
    targets = np.array([x, x ^ mask_a, x ^ mask_b, x ^ mask_a ^ mask_b])
    alive = np.ones(2**n, bool)
    everything = all_assignments(n)
    clauses = []
    while alive.sum() > 4:
        i, j = rng.choice(n, 2, replace=False) + 1
        clause = ((int(i), int(rng.choice([-1, 1]))), (int(j), int(rng.choice([-1, 1]))))
        if not satisfied(targets, clause).all():
            continue
        keep = satisfied(everything, clause)
        if (alive & ~keep).any():
            alive &= keep
            clauses.append(clause)
    found = everything[alive]
    assert {tuple(r) for r in found} == {tuple(r) for r in targets}
    return TwoSatInstance(n, tuple(clauses)), targets


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", type=Path, default=DATA)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    index = {}
    for name, (n, sa, sb) in SPECS.items():
        inst, targets = make_instance(n, sa, sb, rng)
        write_2sat(inst, args.out / f"{name}.cnf")
        index[name] = {"n_vars": n, "n_clauses": len(inst.clauses),
                       "ground_states": ["".join("1" if v else "0" for v in t) for t in targets]}
        print(f"{name}: N={n} M={len(inst.clauses)}")
    (args.out / "index.json").write_text(json.dumps(index, indent=2) + "\n")


if __name__ == "__main__":
    main()
