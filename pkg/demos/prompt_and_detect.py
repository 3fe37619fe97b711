"""Build each prompt strategy around the A1 summary and send it to the scripted mock.

The mock answers "yes" exactly when the prompt says some branch frees memory,
so the verdict flips when the context drops that line.

    python3 demos/prompt_and_detect.py [--strategy cot]
"""

from __future__ import annotations

import argparse
import logging
import os

from pacvd.abstraction import Level, abstract
from pacvd.catalog import default_catalog
from pacvd.evaluation import build_exemplar_store, load_dataset
from pacvd.llm import Gateway, MockProvider
from pacvd.prompts import PromptStrategy, build_prompt

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(ROOT, "tests", "fixtures")

log = logging.getLogger("demo")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--strategy", default=None, help="show only this strategy")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    samples = load_dataset(os.path.join(FIXTURES, "dataset.jsonl"))
    sample = samples[0]
    catalog = default_catalog()
    gateway = Gateway(MockProvider.from_file(os.path.join(FIXTURES, "mock_free_rule.json")))

    # few-shot strategies draw on the other samples; the leakage guard keeps this one out
    store = build_exemplar_store(samples)
    strategies = [PromptStrategy.parse(args.strategy)] if args.strategy else list(PromptStrategy)

    for level in (Level.A1, Level.A2):
        context = abstract(sample.target_name, sample.units(), catalog, level, 3).rendered.strip()
        log.info("######## context %s ########\n%s\n", level.value, context)
        for strategy in strategies:
            try:
                bundle = build_prompt(strategy, sample.target_code, context, store, args.seed, k=1,
                                      exclude=(sample.id,))
            except Exception as exc:
                log.info("%-22s skipped: %s", strategy.value, exc)
                continue
            verdict = gateway.complete(bundle)
            log.info("%-22s prompt %s  turns=%d  verdict=%s", strategy.value, bundle.prompt_hash,
                     len(verdict.turns), verdict.label)

    if args.strategy:
        context = abstract(sample.target_name, sample.units(), catalog, Level.A1, 3).rendered.strip()
        bundle = build_prompt(strategies[0], sample.target_code, context, store, args.seed, k=1,
                              exclude=(sample.id,))
        log.info("\n--- transcript (%s, A1) ---", strategies[0].value)
        for msg in gateway.complete(bundle).turns:
            log.info("[%s]\n%s\n", msg["role"], msg["content"])


if __name__ == "__main__":
    main()
