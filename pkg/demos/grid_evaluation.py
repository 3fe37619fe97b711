"""Run a small context x strategy grid on the two-sample fixture, then resume it.

    python3 demos/grid_evaluation.py [--out /tmp/pacvd-demo]
"""

from __future__ import annotations

import argparse
import logging
import os
import tempfile

from pacvd.evaluation import load_dataset, run_grid
from pacvd.llm import Gateway, MockProvider

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(ROOT, "tests", "fixtures")

CONTEXTS = ["none", "A1", "A2", "A3", "all-callees", "api-guided", "hierarchy"]
STRATEGIES = ["basic", "role-playing", "cot"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=None, help="run directory (default: a fresh temp dir)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    log = logging.getLogger("demo")

    out = args.out or tempfile.mkdtemp(prefix="pacvd-demo-")
    samples = load_dataset(os.path.join(FIXTURES, "dataset.jsonl"))
    script = os.path.join(FIXTURES, "mock_free_rule.json")

    run = run_grid(samples, CONTEXTS, STRATEGIES, Gateway(MockProvider.from_file(script)), out_dir=out)
    log.info("%s", run.table())
    log.info("first pass: %d dialogues sent, %d cached", run.provider_calls, run.cache_hits)

    # Only the fuzzy level says "On some branches", so the rule fires only for A1 cells.
    # Raw code and the finer levels leave the mock answering "no" everywhere.

    again = run_grid(samples, CONTEXTS, STRATEGIES, Gateway(MockProvider.from_file(script)),
                     out_dir=out, resume=True)
    log.info("resumed: %d dialogues sent, %d cached", again.provider_calls, again.cache_hits)
    assert again.to_json() == run.to_json()
    log.info("run directory: %s (run.json, metrics.txt, verdicts/)", out)


if __name__ == "__main__":
    main()
