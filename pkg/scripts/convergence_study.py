from __future__ import annotations

import argparse
from pathlib import Path
import sys
from typing import Any

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.hankel_spectra import io
from src.hankel_spectra.reference import mehler_pipeline, rosenblum_pipeline
from src.hankel_spectra.utils import fan_out
from src.logger import get_logger

logger = get_logger("convergence_study")

COLUMNS = ("n", "kolmogorov_mehler", "kolmogorov_rosenblum", "mass_mehler", "mass_rosenblum")
DEFAULT_SIZES = (50, 100, 200, 400)


def convergence_study(
    sizes: list[int],
    out_csv: str | None = None,
    method: str = "accurate",
) -> list[dict[str, Any]]:
    """Run both reference pipelines for every node count and collect the distances."""
    if not sizes:
        raise ValueError("At least one node count is required")
    if any(n < 1 for n in sizes):
        raise ValueError(f"Node counts must be >= 1, got {sizes}")

    def run_one(n: int) -> dict[str, Any]:
        mehler = mehler_pipeline(n, method=method)
        rosenblum = rosenblum_pipeline(n, method=method)
        return {
            "n": n,
            "kolmogorov_mehler": mehler.distance,
            "kolmogorov_rosenblum": rosenblum.distance,
            "mass_mehler": mehler.mass,
            "mass_rosenblum": rosenblum.mass,
        }

    rows = fan_out(run_one, sorted(set(sizes)))
    io.write_rows(
        out_csv,
        COLUMNS,
        ([row[column] for column in COLUMNS] for row in rows),
        stream=sys.stdout,
    )
    return rows


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description="Kolmogorov distance of both reference pipelines against node count")
    ap.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES), help="Node counts to run")
    ap.add_argument("--solver", default="accurate", choices=["accurate", "baseline"], help="Eigensolver")
    ap.add_argument("--out-csv", default=None, help="Output CSV path (default: stdout)")
    args = ap.parse_args(argv)

    rows = convergence_study(args.sizes, out_csv=args.out_csv, method=args.solver)
    for before, after in zip(rows, rows[1:]):
        for column in ("kolmogorov_mehler", "kolmogorov_rosenblum"):
            if after[column] > before[column]:
                logger.warning(f"{column} grew from n={before['n']} to n={after['n']}")
    if args.out_csv:
        print(f"Wrote convergence table to {args.out_csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
