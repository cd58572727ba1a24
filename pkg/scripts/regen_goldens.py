#!/usr/bin/env python3
"""Regenerate the committed golden traces from the fixtures.

Run from the repo root after an intentional engine or scenario change:

    python3 scripts/regen_goldens.py

The golden files are the unit of byte-exact replay testing; regenerating
them is a deliberate act, reviewed like any other behavior change.
"""

from pathlib import Path

from cloudrisk.scenarios import ScenarioConfig, Workload, build_scenario, run

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"

GOLDEN_SEED = 42

CASES = {
    "dedicated.jsonl": ("scenario_dedicated.json", "workload_bob_short.json"),
    "reservation.jsonl": ("scenario_reservation.json", "workload_bob_short.json"),
    "statmux.jsonl": ("scenario_statmux.json", "workload_bob_short.json"),
}


def main() -> None:
    GOLDEN.mkdir(exist_ok=True)
    for out_name, (scenario_name, workload_name) in sorted(CASES.items()):
        cfg = ScenarioConfig.from_file(FIXTURES / scenario_name)
        workload = Workload.from_file(FIXTURES / workload_name)
        trace = run(build_scenario(cfg), workload, seed=GOLDEN_SEED)
        path = GOLDEN / out_name
        path.write_text(trace.serialize(), encoding="utf-8", newline="")
        print(f"wrote {path} ({len(trace.events)} events)")


if __name__ == "__main__":
    main()
