"""Command-line interface.

Subcommands: train, decode, entropy, score, typical, test, analyze,
join-ratings.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .decoding import DecodeConfig, decode_one
from .errors import InfobandError
from .information import exact_entropy, mc_entropy, information_content
from .lm import (PromptConditionedModel, Sequence, load_ngram, read_corpus,
                 save_ngram, train_ngram)
from .pipeline import (ExperimentConfig, default_decode_suite, emit_report,
                       join_ratings, read_ratings_csv, report_from_dict,
                       report_json, run_experiment)
from .stats import welch_t_test
from .typicality import typical_set


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A002 - argparse API
        raise UsageError(message)


def _emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))


def _load_model(path: str, context: str | None):
    model = load_ngram(path)
    if context:
        return model, PromptConditionedModel(model, model.vocabulary.encode(context))
    return model, model


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="infoband",
                     description="Information-content analysis of toy language models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit an n-gram model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--max-length", type=int, default=30)
    p.add_argument("--out", required=True)

    p = sub.add_parser("decode", help="run one decoding strategy")
    p.add_argument("--model", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--context", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--G", type=int, default=None, dest="groups")
    p.add_argument("--lambda", type=float, default=None, dest="diversity")
    p.add_argument("--p", type=float, default=None, dest="top_p")
    p.add_argument("--mbr-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("entropy", help="estimate or enumerate model entropy")
    p.add_argument("--model", required=True)
    p.add_argument("--context", default=None)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--cap", type=int, default=1_000_000)

    p = sub.add_parser("score", help="information content of a string")
    p.add_argument("--model", required=True)
    p.add_argument("--context", default=None)
    p.add_argument("--text", required=True)

    p = sub.add_parser("typical", help="typical-set census")
    p.add_argument("--model", required=True)
    p.add_argument("--context", default=None)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--cap", type=int, default=1_000_000)
    p.add_argument("--members", action="store_true",
                   help="include the member list (may be large)")

    p = sub.add_parser("test", help="Welch t-test between two value files")
    p.add_argument("--a", required=True, help="newline-separated numbers")
    p.add_argument("--b", required=True)
    p.add_argument("--paired", action="store_true")
    p.add_argument("--one-sided", action="store_true")
    p.add_argument("--alpha", type=float, default=0.01)

    p = sub.add_parser("analyze", help="run the full experiment pipeline")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--corpus", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv-bundle"), default="json")
    p.add_argument("--ratings", default=None, help="join this ratings CSV")

    p = sub.add_parser("join-ratings", help="attach ratings to a report")
    p.add_argument("--report", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--out", required=True)

    return parser


CONFIG_KEYS = ("corpus", "model", "order", "alpha", "max_length", "contexts",
               "context_prefix_len", "entropy_samples", "seed", "test_alpha",
               "band_on", "strategies", "report", "hist_bin_width_total",
               "hist_bin_width_normalized", "ratings")


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"config line {lineno}: expected key = value")
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _experiment_config(args) -> tuple[ExperimentConfig, str | None]:
    raw = parse_config_file(args.config) if args.config else {}
    corpus = args.corpus or raw.get("corpus")
    if not corpus:
        raise UsageError("analyze needs --corpus or a config file with a corpus key")
    suite = default_decode_suite()
    if "strategies" in raw:
        names = [n.strip() for n in raw["strategies"].split(",") if n.strip()]
        unknown = [n for n in names if n not in suite]
        if unknown:
            raise UsageError(f"unknown strategies in config: {', '.join(unknown)}")
        suite = {n: suite[n] for n in names}
    contexts = None
    if "contexts" in raw:
        contexts = tuple(c for c in raw["contexts"].split(",") if c)
    return ExperimentConfig(
        corpus_path=corpus,
        model_path=raw.get("model"),
        order=int(raw.get("order", 2)),
        alpha=float(raw.get("alpha", 0.1)),
        max_length=int(raw.get("max_length", 30)),
        contexts=contexts,
        context_prefix_len=int(raw.get("context_prefix_len", 2)),
        strategies=suite,
        entropy_samples=int(raw.get("entropy_samples", 100)),
        seed=args.seed if args.seed is not None else int(raw.get("seed", 0)),
        test_alpha=float(raw.get("test_alpha", 0.01)),
        band_on=raw.get("band_on", "total"),
        hist_bin_width_total=float(raw.get("hist_bin_width_total", 2.0)),
        hist_bin_width_normalized=float(raw.get("hist_bin_width_normalized", 0.25)),
        report_path=args.report or raw.get("report"),
    ), (args.ratings or raw.get("ratings"))


def _read_values(path: str) -> list[float]:
    with open(path, "r", encoding="utf-8") as fh:
        return [float(line) for line in fh.read().split()]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "train":
            model = train_ngram(read_corpus(args.corpus), args.order, args.alpha,
                                args.max_length)
            save_ngram(model, args.out)
            _emit({"model": args.out, "vocab_size": model.vocabulary.size,
                   "contexts": len(model.counts)})
        elif args.command == "decode":
            _, model = _load_model(args.model, args.context)
            try:
                cfg = DecodeConfig(args.strategy, k=args.k, groups=args.groups,
                                   diversity=args.diversity, top_p=args.top_p,
                                   mbr_samples=args.mbr_samples, seed=args.seed)
                cfg.validate()
            except ValueError as exc:
                print(f"usage error: {exc}", file=sys.stderr)
                return 1
            cand = decode_one(model, cfg)
            _emit({"text": cand.sequence.text(model.vocabulary),
                   "log_prob": cand.log_prob})
        elif args.command == "entropy":
            _, model = _load_model(args.model, args.context)
            if args.exact:
                h, sigma = exact_entropy(model, args.cap)
                _emit({"exact": True, "entropy": h, "std": sigma})
            else:
                est = mc_entropy(model, args.samples, args.seed)
                _emit({"exact": False, "entropy": est.mean, "std": est.std,
                       "count": est.count, "stderr": est.stderr})
        elif args.command == "score":
            base, model = _load_model(args.model, args.context)
            profile = information_content(
                model, Sequence.from_text(args.text, base.vocabulary))
            _emit({"text": args.text, "total": profile.total,
                   "normalized": profile.normalized,
                   "surprisals": list(profile.surprisals)})
        elif args.command == "typical":
            _, model = _load_model(args.model, args.context)
            report = typical_set(model, args.epsilon, args.cap,
                                 include_members=args.members)
            payload = {"epsilon": report.epsilon, "entropy": report.entropy,
                       "lower": report.lower, "upper": report.upper,
                       "member_count": report.member_count,
                       "member_mass": report.member_mass,
                       "support_size": report.support_size}
            if report.members is not None:
                payload["members"] = [s.text(model.vocabulary) for s in report.members]
            _emit(payload)
        elif args.command == "test":
            res = welch_t_test(_read_values(args.a), _read_values(args.b),
                               paired=args.paired, one_sided=args.one_sided)
            payload = res.to_dict()
            payload["alpha"] = args.alpha
            payload["reject"] = res.p_value < args.alpha
            _emit(payload)
        elif args.command == "analyze":
            config, ratings_path = _experiment_config(args)
            report = run_experiment(config)
            if ratings_path:
                report = join_ratings(report, read_ratings_csv(ratings_path))
            if config.report_path:
                paths = emit_report(report, config.report_path, args.format)
                _emit({"written": paths})
            else:
                print(report_json(report), end="")
        elif args.command == "join-ratings":
            with open(args.report, "r", encoding="utf-8") as fh:
                report = report_from_dict(json.load(fh))
            joined = join_ratings(report, read_ratings_csv(args.ratings))
            emit_report(joined, args.out, "json")
            _emit({"written": [args.out]})
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (InfobandError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
