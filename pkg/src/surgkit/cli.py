"""Command-line entry point.

Subcommands cover the whole pipeline: ingest -> generate -> stats ->
review-serve -> apply-clean -> eval, plus decode-sim for the decoding
kernels. Logs go to standard error; data goes to files or standard output.
Exit codes: 0 success, 1 validation problem, 2 I/O problem.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import annotations, cleaning, generation, review_server
from .config import Config, ConfigError, load_config
from .decoding import (
    BigramProvider,
    DecodingError,
    ScriptedProvider,
    VCDConfig,
    distort,
    greedy_decode,
)
from .enrich import make_enricher
from .metrics import align_files, evaluate, make_judge, normalize_metric_names
from .records import ConversationParadigm, dump_records, load_records
from .templates import default_templates, load_templates

logger = logging.getLogger("surgkit")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class UsageError(ValueError):
    """Bad flags or inputs, reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting so main() owns the code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        _write_atomic(Path(output), text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _read_lines(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.readlines()


def _load_cfg(args: argparse.Namespace) -> Config:
    if getattr(args, "config", None):
        return load_config(Path(args.config))
    return Config()


def _pick(flag_value, config_value):
    return config_value if flag_value is None else flag_value


# ---------------------------------------------------------------- commands


def _cmd_ingest(args: argparse.Namespace) -> int:
    frames = list(annotations.ingest_lines(_read_lines(args.input), args.schema))
    text = "".join(
        json.dumps(annotations.frame_to_json(f), sort_keys=True) + "\n" for f in frames
    )
    _emit(text, args.output)
    logger.info("ingested %d frames from %s (%s schema)", len(frames), args.input, args.schema)
    return EXIT_OK


def _parse_caps(entries: Optional[Sequence[str]], base: Dict[str, int]) -> Dict[str, int]:
    caps = dict(base)
    valid = {p.value for p in ConversationParadigm}
    for entry in entries or ():
        key, sep, value = entry.partition("=")
        if not sep or key not in valid:
            raise UsageError(
                f"--cap expects <paradigm>=<count> with paradigm in {sorted(valid)}, got {entry!r}"
            )
        try:
            caps[key] = int(value)
        except ValueError as exc:
            raise UsageError(f"--cap {entry!r}: {exc}") from exc
        if caps[key] < 0:
            raise UsageError(f"--cap {entry!r}: count must be >= 0")
    return caps


def _cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    frames_path = _pick(args.frames, cfg.paths.corpus)
    if not frames_path:
        raise UsageError("generate needs --frames (or paths.corpus in the config)")
    templates_path = _pick(args.templates, cfg.paths.templates)
    templates = load_templates(templates_path) if templates_path else default_templates()
    seed = _pick(args.seed, cfg.generation.seed)
    caps = _parse_caps(args.cap, cfg.generation.caps)
    enricher = make_enricher(_pick(args.enricher, cfg.generation.enricher))
    numerals = _pick(args.numerals, cfg.generation.numerals)
    frames = list(annotations.ingest_lines(_read_lines(frames_path), "canonical"))

    jobs = max(1, args.jobs)
    if jobs == 1:
        records = generation.generate_corpus(frames, templates, seed, enricher, caps, numerals)
    else:
        # Frames are independent; map preserves frame order, so the output
        # is byte-identical to the serial run.
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = pool.map(
                lambda f: generation.generate_for_frame(f, templates, seed, enricher, caps, numerals),
                frames,
            )
            records = [record for chunk in chunks for record in chunk]

    _emit(dump_records(records), _pick(args.output, cfg.paths.output))
    logger.info("generated %d records from %d frames (seed %d)", len(records), len(frames), seed)
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    records = list(load_records(_read_lines(args.records)))
    report = generation.corpus_stats(records)
    _emit(json.dumps(report.as_json(), indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def _session_paths(session_dir: str) -> tuple:
    root = Path(session_dir)
    return root / "session.json", root / "decisions.jsonl"


def _open_session(
    records, session_dir: str, ratio: float, seed: int
) -> "cleaning.ReviewSession":
    """Resume the session stored in session_dir, or start one."""
    meta_path, log_path = _session_paths(session_dir)
    digest = cleaning.corpus_digest(records)
    if meta_path.exists():
        session = cleaning.load_session(meta_path, log_path)
        if session.corpus_digest != digest:
            raise UsageError(
                f"session in {session_dir} was created for a different corpus "
                f"(digest {session.corpus_digest[:12]}.. != {digest[:12]}..)"
            )
        logger.info(
            "resumed session: %d/%d decided", len(session.decisions), len(session.sample)
        )
        return session
    session = cleaning.sample_for_review(records, ratio=ratio, seed=seed)
    cleaning.save_session_meta(meta_path, session)
    cleaning.replay_decisions(session, log_path)
    logger.info("new session: sampled %d of %d records", len(session.sample), len(records))
    return session


def _cmd_review_serve(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    records = list(load_records(_read_lines(args.records)))
    frames = list(annotations.ingest_lines(_read_lines(args.frames), "canonical"))
    corpus_root = Path(args.corpus_root or Path(args.frames).parent)
    session = _open_session(
        records,
        args.session_dir,
        ratio=_pick(args.ratio, cfg.cleaning.ratio),
        seed=_pick(args.seed, cfg.cleaning.seed),
    )
    _, log_path = _session_paths(args.session_dir)
    service = review_server.ReviewService(
        records=records,
        frames=frames,
        session=session,
        log_path=log_path,
        corpus_root=corpus_root,
        output_path=Path(args.output) if args.output else None,
        changelog_path=Path(args.changelog) if args.changelog else None,
        rule_threshold=_pick(args.rule_threshold, cfg.cleaning.rule_threshold),
    )
    server = review_server.serve(
        service,
        host=args.host,
        port=args.port,
        static_dir=Path(args.static_dir) if args.static_dir else None,
        token=args.token,
    )
    host, port = server.server_address[:2]
    print(f"http://{host}:{port}/", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("shutting down")
    finally:
        server.server_close()
    return EXIT_OK


def _cmd_apply_clean(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    records = list(load_records(_read_lines(args.records)))
    meta_path, log_path = _session_paths(args.session_dir)
    if not meta_path.exists():
        raise UsageError(f"no session found under {args.session_dir}")
    session = cleaning.load_session(meta_path, log_path)
    if session.corpus_digest != cleaning.corpus_digest(records):
        raise UsageError("session was created for a different corpus")
    threshold = _pick(args.rule_threshold, cfg.cleaning.rule_threshold)
    rules = cleaning.compile_rules(session, records, threshold)
    cleaned, changelog = cleaning.apply_rules(records, rules, session)
    _emit(dump_records(cleaned), _pick(args.output, cfg.paths.output))
    if args.changelog:
        payload = changelog.as_json()
        payload["rules"] = [cleaning.rule_to_json(rule) for rule in rules]
        _write_atomic(Path(args.changelog), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logger.info(
        "applied %d rules: %d records kept, %d changes, %d conflicts",
        len(rules),
        len(cleaned),
        len(changelog.changes),
        len(changelog.conflicts),
    )
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    pairs, _, _ = align_files(_read_lines(args.references), _read_lines(args.transcript))
    requested = (
        normalize_metric_names(args.metrics.split(","))
        if args.metrics
        else (normalize_metric_names(cfg.eval.metrics) if cfg.eval.metrics else None)
    )
    judge = make_judge(_pick(args.judge, cfg.eval.judge))
    report = evaluate(pairs, metrics=requested, judge=judge)
    _emit(json.dumps(report.as_json(), indent=2, sort_keys=True) + "\n", args.output)
    for line in report.table().splitlines():
        logger.info("%s", line)
    return EXIT_OK


def _cmd_decode_sim(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    kind, sep, path = args.provider.partition(":")
    if not sep or kind not in ("scripted", "bigram"):
        raise UsageError("--provider must be scripted:<file> or bigram:<file>")
    vcd = VCDConfig(
        alpha=_pick(args.alpha, cfg.decode.alpha),
        beta=_pick(args.beta, cfg.decode.beta),
        sigma=_pick(args.sigma, cfg.decode.sigma),
        seed=args.seed,
    )
    if kind == "scripted":
        provider = ScriptedProvider.from_text(Path(path).read_text(encoding="utf-8"))
        x, x_distorted = ScriptedProvider.ORIGINAL, ScriptedProvider.DISTORTED
        max_len = args.max_len or len(provider.steps)
    else:
        provider = BigramProvider.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        bias = np.zeros(provider.vocab_size)
        x, x_distorted = bias, distort(bias, vcd.sigma, vcd.seed)
        max_len = args.max_len or 16
    if args.vocab is not None and args.vocab != provider.vocab_size:
        raise UsageError(
            f"--vocab {args.vocab} does not match the provider's vocabulary "
            f"({provider.vocab_size})"
        )
    result = greedy_decode(provider, x, x_distorted, vcd, max_len)
    payload = {
        "tokens": result.tokens,
        "distributions": [[float(v) for v in dist] for dist in result.distributions],
        "error": result.error,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    if result.error:
        logger.warning("decode ended early: %s", result.error)
    return EXIT_OK


# ---------------------------------------------------------------- wiring


def _build_parser() -> _Parser:
    parser = _Parser(prog="surgkit", description=__doc__)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", help="adapt source annotations to canonical frames")
    p.add_argument("--input", required=True, help="source annotation JSONL")
    p.add_argument("--schema", required=True, choices=sorted(annotations.ADAPTERS))
    p.add_argument("--output", help="canonical frames JSONL (default stdout)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("generate", help="build an instruction corpus from frames")
    p.add_argument("--frames", help="canonical frames JSONL")
    p.add_argument("--templates", help="question template TSV (default: built-in set)")
    p.add_argument("--seed", type=int, help="generation seed (default 0)")
    p.add_argument(
        "--cap",
        action="append",
        metavar="PARADIGM=N",
        help="cap records per paradigm; repeatable, overrides config per key",
    )
    p.add_argument("--enricher", choices=["stub", "live"], help="sentence enricher")
    p.add_argument("--numerals", choices=["words", "digits"], help="count answer style")
    p.add_argument("--jobs", type=int, default=1, help="parallel frame workers")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="records JSONL (default stdout)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("stats", help="corpus composition report")
    p.add_argument("--records", required=True, help="records JSONL")
    p.add_argument("--output", help="report JSON (default stdout)")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("review-serve", help="serve the review session over HTTP")
    p.add_argument("--records", required=True, help="records JSONL under review")
    p.add_argument("--frames", required=True, help="canonical frames JSONL (for images)")
    p.add_argument("--corpus-root", help="directory image paths are relative to")
    p.add_argument("--session-dir", required=True, help="session state directory")
    p.add_argument("--ratio", type=float, help="sampling ratio (default 0.2)")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--rule-threshold", type=int, help="edits needed to form a rule")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8140, help="0 picks an ephemeral port")
    p.add_argument("--token", help="require this bearer token on the API")
    p.add_argument("--static-dir", help="directory with the built frontend")
    p.add_argument("--output", help="cleaned corpus path written on finalize")
    p.add_argument("--changelog", help="changelog path written on finalize")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=_cmd_review_serve)

    p = sub.add_parser("apply-clean", help="compile rules and clean the corpus offline")
    p.add_argument("--records", required=True, help="records JSONL")
    p.add_argument("--session-dir", required=True, help="session state directory")
    p.add_argument("--rule-threshold", type=int, help="edits needed to form a rule")
    p.add_argument("--output", help="cleaned records JSONL (default stdout)")
    p.add_argument("--changelog", help="changelog JSON path")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=_cmd_apply_clean)

    p = sub.add_parser("eval", help="score a transcript against references")
    p.add_argument("--references", required=True, help="reference records JSONL")
    p.add_argument("--transcript", required=True, help="predictions JSONL")
    p.add_argument("--metrics", help="comma-separated metric subset")
    p.add_argument("--judge", choices=["stub", "live"], help="description judge")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="report JSON (default stdout)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("decode-sim", help="run the contrastive decoding loop")
    p.add_argument("--provider", required=True, help="scripted:<file> or bigram:<file>")
    p.add_argument("--alpha", type=float, help="contrast weight")
    p.add_argument("--beta", type=float, help="plausibility cutoff fraction")
    p.add_argument("--sigma", type=float, help="conditioning noise scale")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--vocab", type=int, help="expected vocabulary size (checked)")
    p.add_argument("--max-len", type=int, help="decode length")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output", help="result JSON (default stdout)")
    p.set_defaults(func=_cmd_decode_sim)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
