#!/usr/bin/env python3
"""Run the four flagship flows end to end and print their transcripts.

Usage: python3 scripts/run_case_studies.py [--mode replay|model]
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mof_forge.service import make_service  # noqa: E402


def banner(title: str) -> None:
    print(f"\n{'=' * 72}\n{title}\n{'=' * 72}")


def show(payload: dict) -> None:
    if payload["kind"] == "clarification":
        print(f"  -> clarification: {payload['prompt']}")
        return
    print(f"  -> run {payload['run_id']}: {payload['status']}")
    report = payload.get("report")
    if report:
        for line in report["narrative"].splitlines():
            print(f"     {line}")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", choices=["replay", "model"], default="replay")
    parser.add_argument("--fixtures", default=None)
    args = parser.parse_args()

    runs = tempfile.mkdtemp(prefix="mof-forge-cases-")
    svc = make_service(fixtures_root=args.fixtures, runs_root=runs,
                       mode=args.mode)
    print(f"run artifacts under {runs}")

    banner("Case 1: geometric analysis with interactive clarification")
    print("user: What is the surface area of a MOF?")
    show(svc.submit_query("case1", "What is the surface area of a MOF?"))
    print("user: I want to calculate the surface area of UiO-66")
    show(svc.respond_clarification(
        "case1", "I want to calculate the surface area of UiO-66"))

    banner("Case 2: reference-guided transport run with a correction gate")
    print("user: diffusion coefficient of CO2 in UiO-66 "
          "(attached: pair_style lj/cut 12.0)")
    payload = svc.submit_query(
        "case2", "Calculate the diffusion coefficient of CO2 in UiO-66",
        attachments={"settings.txt": "pair_style lj/cut 12.0"})
    show(payload)
    pending = payload["snapshot"]["awaiting_confirmation"]
    if pending:
        rule_ids = sorted({r for rules in pending.values() for r in rules})
        print(f"  corrections awaiting confirmation: {', '.join(rule_ids)}")
        print("  user confirms.")
        show(svc.confirm_correction(payload["run_id"], rule_ids, True))

    banner("Case 3: binding-energy comparison with follow-up analysis")
    print("user: Compare the CO2 binding energies of HKUST-1 and ZIF-8 "
          "and explain the difference")
    show(svc.submit_query(
        "case3", "Compare the CO2 binding energies of HKUST-1 and ZIF-8 "
                 "and explain the difference"))

    banner("Case 4: hierarchical screening over the packaged database")
    print("user: Screen the fixture-db database for the top candidates by "
          "CH4 uptake")
    payload = svc.submit_query(
        "case4", "Screen the fixture-db database for the top candidates by "
                 "CH4 uptake")
    show(payload)
    funnel = svc.funnel(payload["run_id"])
    for stage in funnel["stages"]:
        print(f"     stage {stage['stage_id']}: {stage['input_count']} -> "
              f"{stage['output_count']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
