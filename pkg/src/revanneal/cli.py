"""Command-line front end.

Exit codes: 0 success, 2 input or configuration error, 3 numerical or fit failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .equilibrium import (
    beta_to_temperature, chain_level_probs, chain_mean_energy, fit_beta_to_energies,
    gibbs_probs, state_probs,
)
from .errors import CapabilityError, DegenerateChainError, DomainError, FitError, InputError
from .fitting import fit_exp_decay, fit_power_law, fit_saturating_exp
from .problems import builtin, enumerate_spectrum, parse_chain_label, state_labels
from .scans import (
    ScanConfig, chain_equilibrium_sweep, chain_rows_csv, read_scan_csv, run_scan, write_scan,
)
from .schedule import TemperatureConversion, fit_schedule, read_schedule_csv, schedule_to_json

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
PER_STATE_MAX_SPINS = 6


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _sidecar(out, meta: dict) -> None:
    meta = dict(meta, software={"revanneal": __version__})
    _write_json(Path(str(out) + ".meta.json"), meta)


# --- commands ---------------------------------------------------------------------


def cmd_schedule_fit(args) -> int:
    sched = fit_schedule(read_schedule_csv(args.table))
    data = schedule_to_json(sched)
    print(f"max relative residual: A {sched.residual_A:.3e}, B {sched.residual_B:.3e}")
    print(f"eta = {data['eta']:.6f} K")
    if args.out:
        _write_json(args.out, data)
        _sidecar(args.out, {"command": "schedule-fit", "input": str(args.table),
                            "input_sha256": _sha256(args.table)})
    else:
        print(json.dumps(data, indent=2))
    return EXIT_OK


def _load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return data


def cmd_run_scan(args) -> int:
    data = _load_config(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = ScanConfig.from_json(data).validate()
    result = run_scan(cfg, workers=args.workers)
    if args.out:
        write_scan(result, args.out)
    else:
        sys.stdout.write(result.to_csv())
    if args.json:
        print(json.dumps(result.meta(), indent=2, sort_keys=True))
    return EXIT_OK


def _xy_csv(path, xcol=None, ycol=None):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            raise InputError(f"{path}: empty file")
        names = reader.fieldnames
        xcol = xcol or names[0]
        ycol = ycol or names[1]
        for c in (xcol, ycol):
            if c not in names:
                raise InputError(f"{path}: no column {c!r} (have {names})")
        rows = [(float(r[xcol]), float(r[ycol])) for r in reader]
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows)


def cmd_fit(args) -> int:
    report = {"command": "fit", "kind": args.kind, "input": str(args.data),
              "input_sha256": _sha256(args.data)}
    if args.kind == "saturating":
        scan = read_scan_csv(args.data)
        label = args.state or max(scan, key=lambda k: scan[k][-1, 1])
        if label not in scan:
            raise InputError(f"state {label!r} not in scan (have {sorted(scan)})")
        col = 2 if args.column == "sampled" else 1
        pts = scan[label][:, [0, col]]
        fit = fit_saturating_exp(pts)
        report.update(state=label, column=args.column, **fit.to_json())
        print(f"{label}: f1={fit.f1:.6g} f2={fit.f2:.6g} f3={fit.f3:.6g} "
              f"residual={fit.residual:.3e} iterations={fit.iterations}")
    elif args.kind in ("expdecay", "powerlaw"):
        pts = _xy_csv(args.data, args.x, args.y)
        fn = fit_exp_decay if args.kind == "expdecay" else fit_power_law
        fit = fn(pts)
        report.update(fit.to_json())
        print(f"{args.kind}: a={fit.a:.6g} b={fit.b:.6g} residual={fit.residual:.3e}"
              + (f" excluded={len(fit.excluded)}" if fit.excluded else ""))
    else:
        ycol = args.y or ("mean_energy_sampled" if args.column == "sampled" else "mean_energy")
        pts = _xy_csv(args.data, args.x or "N", ycol)
        beta = fit_beta_to_energies(pts, args.J)
        conv = TemperatureConversion(args.eta)
        temp = beta_to_temperature(beta, conv)
        report.update(beta=beta, J=args.J, eta=args.eta, temperature_mK=temp)
        print(f"beta = {beta:.6f}  T = {temp:.3f} mK (eta = {args.eta} K)")
    if args.out:
        _write_json(args.out, report)
    elif args.json:
        print(json.dumps(report, indent=2, sort_keys=True, default=float))
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    if args.beta < 0:
        raise DomainError("beta must be non-negative")
    conv = TemperatureConversion(args.eta)
    chain = parse_chain_label(args.problem)
    out = {"problem": args.problem, "beta": args.beta}
    if args.beta > 0:
        out["temperature_mK"] = beta_to_temperature(args.beta, conv)
    if chain:
        n, J = chain
        lp = chain_level_probs(n, J, args.beta)
        k = np.arange(n)
        energies = J * (n - 1 - 2 * k)
        out["levels"] = [{"domain_walls": int(i), "energy": float(e), "probability": float(p)}
                         for i, e, p in zip(k, energies, lp)]
        out["mean_energy"] = float(chain_mean_energy(n, J, args.beta))
        out["ground_probability"] = float(lp[0])
    else:
        prob = builtin(args.problem)
        spec = enumerate_spectrum(prob)
        lp = gibbs_probs(spec, args.beta)
        out["levels"] = [{"energy": lv.energy, "degeneracy": lv.degeneracy, "probability": float(p)}
                         for lv, p in zip(spec.levels, lp)]
        out["ground_probability"] = float(lp[0])
        if prob.n <= PER_STATE_MAX_SPINS:
            out["states"] = [{"state": lab, "probability": float(p)}
                             for lab, p in zip(state_labels(prob.n), state_probs(prob, args.beta))]
    if args.json:
        print(json.dumps(out, indent=2))
        return EXIT_OK
    print(f"# {args.problem}  beta={args.beta:g}"
          + (f"  T={out['temperature_mK']:.2f} mK" if "temperature_mK" in out else ""))
    print("level  energy        degeneracy  probability")
    for i, lv in enumerate(out["levels"]):
        deg = lv.get("degeneracy", "")
        if chain:
            deg = f"walls={lv['domain_walls']}"
        print(f"{i:<6d} {lv['energy']:<13.6g} {str(deg):<11s} {lv['probability']:.6g}")
    if "states" in out:
        print("state  probability")
        for row in out["states"]:
            print(f"{row['state']:<6s} {row['probability']:.6g}")
    if "mean_energy" in out:
        print(f"mean energy: {out['mean_energy']:.6g}")
    return EXIT_OK


def cmd_chain_sweep(args) -> int:
    rows = chain_equilibrium_sweep(args.n, args.J, args.beta, args.samples, args.seed)
    text = chain_rows_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
        _sidecar(args.out, {"command": "chain-sweep", "n": args.n, "J": args.J,
                            "beta": args.beta, "samples": args.samples, "seed": args.seed})
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="revanneal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule-fit", help="fit closed forms to a schedule CSV")
    p.add_argument("table", help="CSV with columns s,A_over_h_GHz,B_over_h_GHz")
    p.add_argument("--out", help="coefficient JSON to write")
    p.set_defaults(func=cmd_schedule_fit)

    p = sub.add_parser("run-scan", help="run a WTS/ATS scan from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="scan CSV (a .meta.json sidecar is written next to it)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true", help="also print the run metadata")
    p.set_defaults(func=cmd_run_scan)

    p = sub.add_parser("fit", help="fit a scan or table")
    p.add_argument("data", help="scan CSV, two-column CSV, or chain-sweep CSV")
    p.add_argument("--kind", required=True,
                   choices=["saturating", "expdecay", "powerlaw", "beta_energy"])
    p.add_argument("--out", help="fit report JSON")
    p.add_argument("--state", help="state label to fit (saturating; default: most probable at the end)")
    p.add_argument("--column", choices=["exact", "sampled"], default="sampled")
    p.add_argument("--x", help="x column name (default: first column)")
    p.add_argument("--y", help="y column name (default: second column)")
    p.add_argument("--J", type=float, default=-0.1, help="chain coupling for beta_energy")
    p.add_argument("--eta", type=float, default=0.206)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("equilibrium", help="Gibbs table for a problem")
    p.add_argument("problem", help="1S(h), 2S1, 2S2, 2S3, chain(N[,J]) or a problem file")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.206)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("chain-sweep", help="equilibrium chain data over N")
    p.add_argument("--n", type=int, nargs="+", default=[10, 20, 50, 100, 500, 1000])
    p.add_argument("--J", type=float, default=-0.1)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_chain_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, CapabilityError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitError, DegenerateChainError, np.linalg.LinAlgError, ArithmeticError) as exc:
        report = getattr(exc, "report", None)
        print(f"numerical error: {exc}", file=sys.stderr)
        if report:
            print(json.dumps(report, indent=2, default=float), file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
