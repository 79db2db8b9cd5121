import argparse
import warnings
from pathlib import Path

from losim.cli import csv_text


def parser(doc: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc.strip().splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--quick", action="store_true", help="fewer trials and symbols")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    warnings.simplefilter("ignore", RuntimeWarning)
    return p


def save(rows, out: Path, name: str, seed: int):
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(csv_text(rows, "script", seed), newline="")
    print(f"wrote {path}")
