"""Small helpers shared by the experiment scripts."""

import argparse
from pathlib import Path

RESULTS = Path(__file__).resolve().parents[1] / "results"


def parser(doc: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=doc.strip().splitlines()[0])
    ap.add_argument("--out", type=Path, default=RESULTS, help="output directory")
    ap.add_argument("--points", type=int, default=30, help="grid points per scan")
    ap.add_argument("--seed", type=int, default=0)
    return ap


def summarize(tag, result) -> None:
    first = ", ".join(f"{k}={v:.3f}" for k, v in zip(result.labels, result.exact[0]))
    last = ", ".join(f"{k}={v:.3f}" for k, v in zip(result.labels, result.exact[-1]))
    print(f"{tag:<22s} t={result.t_end[0]:g}: {first}")
    print(f"{'':<22s} t={result.t_end[-1]:g}: {last}")
