"""Key-exchange scenario runs: two co-located devices, then the chain.

Replays the bundled simulator scripts and prints who got notified and why.
The first script keeps A and B together for ten one-minute ticks and
diagnoses A at tick 20; the second walks four devices through C's shop on
different schedules. Reports are deterministic for a given script.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from epitrace.ens.sim import run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def summarize(name, report):
    print(f"--- {name}: {report['ticks']} ticks, "
          f"{report['registry_size']} published keys")
    for device in sorted(report["devices"]):
        info = report["devices"][device]
        note = "infected" if info.get("infected") else ""
        print(f"  {device:<10} contact min: {info['encounter_minutes']:>6.1f}  "
              f"notifications: {len(info['notifications'])}  {note}")
        for n in info["notifications"]:
            print(f"      matched {n['matched_key']}  {n['start']} .. {n['end']}"
                  f"  ({n['minutes']:.1f} min)")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", action="store_true",
                        help="dump the raw reports instead of the summary")
    args = parser.parse_args(argv)

    reports = {}
    for name in ("case-study-2.json", "chain.json"):
        script = json.loads((SCENARIOS / name).read_text())
        reports[name] = run_scenario(script)

    if args.json:
        print(json.dumps(reports, indent=2))
        return
    for name, report in reports.items():
        summarize(name, report)


if __name__ == "__main__":
    main()
