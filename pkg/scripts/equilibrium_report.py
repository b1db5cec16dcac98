#!/usr/bin/env python3
"""Print the equilibrium structure of every profile in configs/.

For each config: threshold-coincidence check, then the classified
equilibrium set with kinds, exact abstract values, stability, and basins.
Profiles whose check fails are re-run with the degeneracy override so the
report still shows their structure.
"""

import argparse
import json
from pathlib import Path

from brpop.equilibria import classify, enumerate_equilibria
from brpop.errors import AssumptionViolated
from brpop.model import parse_profile, validate_assumption1

REPO = Path(__file__).resolve().parent.parent


def describe(path):
    with open(path) as fh:
        profile = parse_profile(json.load(fh))
    report = validate_assumption1(profile)
    print(f"== {path.name}")
    for line in report.summary().splitlines():
        print(f"   {line}")
    try:
        eqs = classify(enumerate_equilibria(profile, allow_degenerate=True))
    except AssumptionViolated as exc:
        print(f"   not classifiable: {exc}")
        return
    for cont in eqs.continuum:
        print(
            f"   continuum of equilibria pinned at abstract {cont.value} "
            f"(shared threshold)"
        )
    for pt in eqs.points:
        bits = [
            f"{pt.kind.name.lower().replace('_', '-'):>19}",
            f"abstract {str(pt.abstract_value):>6}",
            f"{pt.stability.name.lower() if pt.stability else '?':>8}",
        ]
        if pt.basin is not None:
            bits.append(f"basin {pt.basin}")
        if pt.globally_stable:
            bits.append("globally stable")
        print("   " + "  ".join(bits))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(REPO / "configs"))
    args = ap.parse_args()
    for path in sorted(Path(args.configs).glob("*.json")):
        describe(path)
        print()


if __name__ == "__main__":
    main()
