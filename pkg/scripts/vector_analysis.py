"""Median rE, rV and spread per technique/layout over the ten evaluation positions.

Runs without HRIRs. Usage: python scripts/vector_analysis.py [--spread arccos|frank|variance]
"""

import argparse

import numpy as np

from swfkit.geometry import evaluation_directions
from swfkit.harness import DEFAULT_CONDITIONS
from swfkit.vectors import SPREAD_FORMULAS, analyze_rendering


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--spread", choices=SPREAD_FORMULAS, default="arccos")
    ap.add_argument("--ambisonic-energy", choices=("broadband", "highband"), default="broadband")
    args = ap.parse_args()

    print(f"{'technique':<11}{'layout':<12}{'rE':>8}{'rV':>8}{'spread':>9}")
    for technique, layout in DEFAULT_CONDITIONS:
        vs = [analyze_rendering(technique, layout, d, args.spread, args.ambisonic_energy) for d in evaluation_directions()]
        re = np.median([v.re_mag for v in vs])
        rv = np.nanmedian([v.rv_mag for v in vs])
        spread = np.median([v.spread_deg for v in vs])
        print(f"{technique:<11}{layout:<12}{re:8.3f}{rv:8.3f}{spread:9.2f}")


if __name__ == "__main__":
    main()
