#!/usr/bin/env python3
"""Run every scenario under scripts/scenarios/ and summarize the verdicts.

Usage:
  python scripts/run_all_scenarios.py [--out runs] [--threads 4] [--seed N]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from dyadicfields.cli import Scenario, ScenarioError, parse_scenario, run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs", help="output directory root")
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--seed", type=int, default=None, help="override every config seed")
    args = parser.parse_args()

    scenario_dir = Path(__file__).parent / "scenarios"
    out_root = Path(args.out)
    failures = 0
    for config in sorted(scenario_dir.glob("*.toml")):
        t0 = time.time()
        try:
            scenario = parse_scenario(config)
            if args.seed is not None:
                scenario = Scenario(
                    name=scenario.name, command=scenario.command, model=scenario.model,
                    params=scenario.params, master_seed=args.seed,
                    out_dir=scenario.out_dir, raw={**scenario.raw, "seed": args.seed})
            manifest = run(scenario, out_dir=out_root / scenario.name,
                           threads=args.threads)
        except (ScenarioError, Exception) as exc:  # noqa: BLE001 - report and continue
            print(f"FAIL {config.name}: {exc}")
            failures += 1
            continue
        summary_path = out_root / scenario.name / f"{scenario.name}_{scenario.command.replace('-', '_')}.json"
        verdict = ""
        if summary_path.exists():
            results = json.loads(summary_path.read_text())["results"]
            for key in ("verdict", "decay_verdict", "agree", "dominates",
                        "preconditions_met", "min_constant", "nonincreasing"):
                if key in results:
                    verdict = f"{key}={results[key]}"
                    break
        print(f"ok   {config.name:<30} {time.time() - t0:6.1f}s  {verdict}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
