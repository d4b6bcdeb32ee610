"""Pair a chest and a waist sensor worn by one synthetic person.

Run with ``python3 demos/pair_two_sensors.py [seed]``.
"""

import sys

from h2b.analysis import BodyScenario
from h2b.protocol import PipelineParams, pair_end_to_end
from h2b.protocol.pipeline import margin_summary
from h2b.signalgen import HeartModel


def main(seed=0):
    heart = HeartModel(mean_ipi=850.0, ipi_std=50.0, seed=seed)
    chest, waist = BodyScenario().record(heart, session=0)
    result = pair_end_to_end(chest, waist, PipelineParams())
    diag = result.diagnostics
    print(f"aligned IPIs      {diag.get('aligned_ipis')}")
    print(f"mismatched bits   {diag.get('mismatch_bits')} of 128")
    if "margin" in diag:
        print(f"margin            {margin_summary(diag['margin'], diag['verdict'])}")
    print(f"verified          {result.verified} ({result.reason or 'ok'})")
    key_a, key_b = result.final_keys
    if key_a is not None:
        print(f"initiator key     {key_a.hex}")
        print(f"responder key     {key_b.hex}")
    return 0 if result.verified else 1


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 0))
