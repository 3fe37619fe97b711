"""Command-line entry point: catalog, abstract, prompt, detect and eval.

Exit status is 0 on success, 1 on a domain error (bad input, unresolvable
target, provider failure) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .abstraction import Level, abstract
from .catalog import ApiCatalog, SchemaError as CatalogSchemaError, default_catalog, load_catalog, serialize_catalog
from .evaluation import SchemaError as DatasetSchemaError
from .evaluation import EmptyGrid, load_dataset, run_grid
from .frontend import ParseError, SourceUnit, parse_unit, print_function
from .graphs import AmbiguousRoot, RootNotFound
from .llm import Gateway, GatewayError, HttpProvider, MockProvider, ProviderConfig, UnscriptedPrompt
from .prompts import ExemplarStore, InsufficientExemplars, PromptStrategy, build_prompt, load_exemplars

logger = logging.getLogger("pacvd")

CONFIG_ENV = "PACVD_CONFIG"
MOCK_PREFIX = "mock:"
STRATEGIES = [s.value for s in PromptStrategy]
LEVELS = [l.value for l in Level]


class CliError(Exception):
    """Domain error reported on stderr with exit status 1."""


# ---------------------------------------------------------------- helpers


def _level(text: str) -> Optional[Level]:
    if text.lower() == "none":
        return None  # no abstraction context
    try:
        return Level.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _strategy(text: str) -> PromptStrategy:
    try:
        return PromptStrategy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _csv(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def read_catalog(path: Optional[str]) -> ApiCatalog:
    if not path:
        return default_catalog()
    with open(path, encoding="utf-8") as fh:
        return load_catalog(fh.read())


def read_units(paths: List[str]) -> List[SourceUnit]:
    units = []
    for path in paths:
        with open(path, "rb") as fh:
            units.append(parse_unit(path, fh.read()))
    return units


def make_provider(spec: Optional[str], config_path: Optional[str]):
    """``mock:<script>`` selects the scripted provider; otherwise a JSON
    provider config from ``--provider-config`` or ``$PACVD_CONFIG``."""
    if spec:
        if not spec.startswith(MOCK_PREFIX):
            raise CliError(f"--provider must look like {MOCK_PREFIX}<script.json>")
        return MockProvider.from_file(spec[len(MOCK_PREFIX):]), ProviderConfig()
    config_path = config_path or os.environ.get(CONFIG_ENV)
    if not config_path:
        raise CliError(f"no provider: pass --provider-config, --provider {MOCK_PREFIX}<script> or set {CONFIG_ENV}")
    config = ProviderConfig.from_file(config_path)
    return HttpProvider(config), config


def make_gateway(args) -> Gateway:
    provider, config = make_provider(args.provider, args.provider_config)
    return Gateway(provider, config.max_in_flight, config.rpm, config.max_input_chars)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _exemplars(path: Optional[str]) -> Optional[ExemplarStore]:
    return load_exemplars(path) if path else None


def _context(args, catalog: ApiCatalog) -> str:
    if args.level is None:
        return ""
    report = abstract(args.target, read_units(args.paths), catalog, args.level, args.depth)
    return report.rendered.strip()


# ---------------------------------------------------------------- commands


def cmd_catalog(args) -> int:
    catalog = read_catalog(args.catalog)
    if args.format == "json":
        doc = {
            "version": catalog.version,
            "entries": [{"name": e.name, "category": e.category, "canonical": e.canonical,
                         "cwes": list(e.cwes)} for e in catalog.entries],
            "pairs": [list(p) for p in catalog.pairs],
        }
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _write(serialize_catalog(catalog), args.out)
    for warning in catalog.lint():
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def cmd_abstract(args) -> int:
    if args.level is None:
        raise CliError("abstract needs a level between A1 and A4")
    catalog = read_catalog(args.catalog)
    report = abstract(args.target, read_units(args.paths), catalog, args.level, args.depth,
                      args.include_fuzzy_at_a2)
    if report.overflow_fallback_used:
        logger.info("path cap exceeded somewhere; reachability fallback used")
    if args.format == "json":
        _write(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    else:
        _write(report.rendered, args.out)
    return 0


def source_of(units: List[SourceUnit], name: str) -> str:
    """Original text of ``name``'s definition."""
    for u in units:
        fn = u.function(name)
        if fn is not None:
            start, end = fn.span
            return u.text[start:end] if end > start else print_function(fn)
    raise RootNotFound(name)


def _bundle(args):
    catalog = read_catalog(args.catalog)
    code = source_of(read_units(args.paths), args.target)
    return build_prompt(args.strategy, code, _context(args, catalog), _exemplars(args.exemplars),
                        args.seed, args.k)


def cmd_prompt(args) -> int:
    bundle = _bundle(args)
    if args.format == "json":
        doc = bundle.to_document()
        doc["prompt_hash"] = bundle.prompt_hash
        _write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", args.out)
    else:
        out = [f"# prompt {bundle.prompt_hash} ({bundle.strategy.value})"]
        for t in bundle.turns:
            out.append(f"--- {t.role}")
            out.append(t.text)
        _write("\n".join(out) + "\n", args.out)
    return 0


def cmd_detect(args) -> int:
    bundle = _bundle(args)
    gateway = make_gateway(args)
    verdict = gateway.complete(bundle)
    out = args.out or f"{args.target}.transcript.json"
    doc = {"target": args.target, "prompt_hash": bundle.prompt_hash, "prompt": bundle.to_document(),
           "verdict": {"label": verdict.label, "raw": verdict.raw, "turns": verdict.turns,
                       "provider_id": verdict.provider_id}}
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    print(f"prompt {bundle.prompt_hash}")
    print(verdict.label)
    logger.info("transcript written to %s", out)
    return 0


def cmd_eval(args) -> int:
    samples = load_dataset(args.dataset)
    contexts = _csv(args.levels)
    strategies = _csv(args.strategies)
    if not contexts or not strategies:
        raise EmptyGrid("--levels and --strategies must each name at least one entry")
    gateway = make_gateway(args)
    run = run_grid(samples, contexts, strategies, gateway, seed=args.seed, out_dir=args.out,
                   resume=args.resume, catalog=read_catalog(args.catalog), depth_limit=args.depth,
                   k=args.k, exemplars=_exemplars(args.exemplars))
    sys.stdout.write(run.table())
    logger.info("%d provider dialogues, %d cache hits", run.provider_calls, run.cache_hits)
    if args.out:
        logger.info("run written to %s", args.out)
    return 0


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser, level_default: Optional[str] = "A3") -> None:
    p.add_argument("--catalog", metavar="FILE", help="API catalog document (default: built-in catalog)")
    p.add_argument("--depth", type=int, default=3, help="call-graph depth limit (default: 3)")
    p.add_argument("--level", type=_level, default=level_default, metavar="{A1,A2,A3,A4,none}",
                   help=f"abstraction level; none sends no API context (default: {level_default})")


def _add_prompt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("paths", nargs="+", help="C source files")
    p.add_argument("--target", required=True, help="function to analyse")
    _add_common(p)
    p.add_argument("--strategy", type=_strategy, default=PromptStrategy.BASIC,
                   metavar="{" + ",".join(STRATEGIES) + "}", help="prompting strategy (default: basic)")
    p.add_argument("--exemplars", metavar="FILE", help="few-shot exemplar records (JSON lines)")
    p.add_argument("--seed", type=int, default=0, help="exemplar sampling seed (default: 0)")
    p.add_argument("-k", type=int, default=2, help="few-shot exemplar count (default: 2)")


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider-config", metavar="FILE",
                   help=f"provider config JSON (default: ${CONFIG_ENV})")
    p.add_argument("--provider", metavar="mock:SCRIPT", help="use a scripted mock provider")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pacvd", description="Primitive-API abstraction for LLM vulnerability detection.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("catalog", help="print the API catalog")
    p.add_argument("--catalog", metavar="FILE", help="API catalog document (default: built-in catalog)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("abstract", help="render the API abstraction of a target function")
    p.add_argument("paths", nargs="+", help="C source files")
    p.add_argument("--target", required=True, help="function to analyse")
    _add_common(p)
    p.add_argument("--include-fuzzy-at-a2", action="store_true", help="keep fuzzy lines at A2 and above")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("prompt", help="show the prompt that detect would send")
    _add_prompt_flags(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("detect", help="ask the model whether a target function is vulnerable")
    _add_prompt_flags(p)
    _add_provider_flags(p)
    p.add_argument("--out", metavar="FILE", help="transcript path (default: TARGET.transcript.json)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="run a context x strategy grid over a dataset")
    p.add_argument("--dataset", required=True, metavar="FILE", help="samples (JSON lines)")
    p.add_argument("--levels", default="A3",
                   help="comma-separated contexts: A1-A4, none, all-callees, api-guided, "
                        "similarity, random, hierarchy (default: A3)")
    p.add_argument("--strategies", default="basic", help="comma-separated prompting strategies (default: basic)")
    _add_provider_flags(p)
    p.add_argument("--catalog", metavar="FILE", help="API catalog document (default: built-in catalog)")
    p.add_argument("--depth", type=int, default=3, help="call-graph depth limit (default: 3)")
    p.add_argument("--exemplars", metavar="FILE", help="few-shot exemplar records (default: drawn from the dataset)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default: 0)")
    p.add_argument("-k", type=int, default=2, help="few-shot exemplar count (default: 2)")
    p.add_argument("--out", metavar="DIR", help="run directory (run.json, metrics.txt, verdicts/)")
    p.add_argument("--resume", action="store_true", help="reuse cached verdicts in --out")
    p.set_defaults(func=cmd_eval)
    return parser


DOMAIN_ERRORS = (
    ParseError, RootNotFound, AmbiguousRoot, CatalogSchemaError, DatasetSchemaError, GatewayError,
    UnscriptedPrompt, InsufficientExemplars, EmptyGrid, CliError, OSError, ValueError,
)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"pacvd {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
