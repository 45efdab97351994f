#!/usr/bin/env python3
"""
Coefficient Export Script

Generates tau(1..n_max) for the discriminant form, writes the coefficient
cache file (header `weight=12 n_max=<N>`, one integer per line) and runs
the exact Hecke checks on the result before reporting.
"""

import os
import sys
import argparse
import time
from pathlib import Path

# Add src directory to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from dotenv import load_dotenv

load_dotenv()

from services.errors import WorkbenchError  # noqa: E402
from services.forms_service import (  # noqa: E402
    CuspForm,
    check_deligne,
    check_hecke,
    generate_tau,
    load_coefficients,
    save_coefficients,
)


class CoefficientExporter:
    """Generates, verifies and writes a coefficient cache"""

    def __init__(self, output: str, n_max: int):
        self.output = Path(output)
        self.n_max = n_max

    def export(self, hecke_limit: int) -> dict:
        start = time.time()
        form = CuspForm(weight=12, tau_cache=tuple(generate_tau(self.n_max)))
        generated = time.time() - start

        report = check_hecke(form, min(hecke_limit, self.n_max))
        deligne = check_deligne(form)
        if not report.passed or deligne:
            raise WorkbenchError(
                f"generated table failed verification: {len(report.violations)} Hecke violations, "
                f"{deligne} Deligne violations"
            )

        save_coefficients(form, self.output)
        reloaded = load_coefficients(self.output)
        if reloaded.tau_cache != form.tau_cache:
            raise WorkbenchError(f"round trip through {self.output} changed the coefficients")

        return {
            "n_max": form.n_max,
            "generation_seconds": generated,
            "hecke_pairs": report.pairs_checked,
            "hecke_recursions": report.recursions_checked,
            "output": str(self.output),
        }


def main():
    parser = argparse.ArgumentParser(description="Export tau(n) coefficients of Delta")
    parser.add_argument(
        '--output',
        type=str,
        default='out/tau.txt',
        help='Path of the coefficient cache file'
    )
    parser.add_argument(
        '--n-max',
        type=int,
        default=100_000,
        help='Number of coefficients'
    )
    parser.add_argument(
        '--hecke-limit',
        type=int,
        default=10_000,
        help='Bound for the exact Hecke checks'
    )

    args = parser.parse_args()

    print("=" * 60)
    print("Coefficient Export Script")
    print("=" * 60)

    try:
        result = CoefficientExporter(output=args.output, n_max=args.n_max).export(args.hecke_limit)

        print(f"Coefficients:          {result['n_max']}")
        print(f"Generation time:       {result['generation_seconds']:.2f} s")
        print(f"Hecke pairs checked:   {result['hecke_pairs']}")
        print(f"Recursions checked:    {result['hecke_recursions']}")
        print(f"Written to:            {result['output']}")
        print("=" * 60)

    except WorkbenchError as e:
        print(f"\nFatal error: {e}")
        sys.exit(1)


if __name__ == '__main__':
    main()
