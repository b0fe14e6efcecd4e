#!/usr/bin/env python3
"""Run one simulated fitting session end to end and print the artifacts.

Creates a session against an in-process service instance (no network),
answers all 28 paired comparisons with the simulated user, and prints the
per-band state trajectory plus the final personalized gains.

Usage: python3 scripts/demo_session.py [--subject 1] [--seed 0]
"""

import argparse
import sys
import tempfile

from fastapi.testclient import TestClient

from hearfit.fixtures import subject
from hearfit.service import create_app


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--subject", type=int, default=1, help="fixture subject 1..8")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--truth", default="3,4,5,2,3",
        help="comma-separated true gain set for the simulated listener",
    )
    args = parser.parse_args()

    fixture = subject(args.subject)
    truth = [int(v) for v in args.truth.split(",")]
    with tempfile.TemporaryDirectory() as tmp:
        client = TestClient(create_app(tmp))
        config = {
            "prescription_db": list(fixture.standard_gains_db),
            "seed": args.seed,
            "mode": "simulated",
            "true_gain_set": truth,
            "clip_duration_s": 1.0,
        }
        sid = client.post("/sessions", json=config).json()["session_id"]
        print(f"session {sid}: subject {fixture.subject}, "
              f"prescription {list(fixture.standard_gains_db)} dB, truth {truth}")

        while True:
            ack = client.post(f"/sessions/{sid}/simulated-step").json()
            if ack["episode_completed"]:
                state = client.get(f"/sessions/{sid}/state").json()
                hp = [(round(b["lam"], 2), round(b["sigma"], 2)) for b in state["bands"]]
                print(f"episode {state['episodes_done']}/7 done; per-band (lam, sigma): {hp}")
            if ack.get("complete"):
                break

        result = client.get(f"/sessions/{sid}/result").json()
        print(f"personalized levels: {result['personalized_levels']} (truth {truth})")
        print(f"level offsets (dB):  {result['level_offsets_db']}")
        print(f"personalized gains:  {result['personalized_gains_db']} dB")
    return 0


if __name__ == "__main__":
    sys.exit(main())
