"""Experiment orchestration: train, decode per context, score, report.

A run trains (or loads) an n-gram model, derives contexts as prompt
prefixes of corpus lines, estimates the conditional entropy of each
context's continuation distribution from ancestral samples, decodes one
string per configured strategy per context, and scores every output plus
the held-out reference by information content.  Ratings files join onto a
finished report to produce rankings, band-versus-chance tests and score
splits.  Reports are deterministic functions of (config, seed) and
serialize to canonical JSON plus a CSV bundle of figure-style tables.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .decoding import (DEFAULT_BEAM_WIDTH, DEFAULT_DIVERSITY, DEFAULT_MBR_SAMPLES,
                       DEFAULT_NUCLEUS_P, DEFAULT_TOP_K, Candidate, DecodeConfig,
                       decode_one, with_seed)
from .errors import (CorpusError, DegenerateSamplesError, InfobandError,
                     PipelineError)
from .information import (EntropyEstimate, InformationProfile, derive_seed,
                          estimate_from_values, information_content,
                          sample_information)
from .lm import (LanguageModel, NgramModel, PromptConditionedModel, Sequence,
                 load_ngram, read_corpus, train_ngram)
from .stats import (BandTestResult, ScoreBandSplit, band_membership,
                    band_vs_chance_test, score_band_split)

SCHEMA_VERSION = 1
REFERENCE_SYSTEM = "reference"


def default_decode_suite() -> dict[str, DecodeConfig]:
    """The standard strategy suite; stochastic seeds are placeholders that
    the pipeline replaces with seeds derived per context."""
    return {
        "greedy": DecodeConfig("greedy"),
        "beam_5": DecodeConfig("beam", k=DEFAULT_BEAM_WIDTH),
        "beam_10": DecodeConfig("beam", k=2 * DEFAULT_BEAM_WIDTH),
        "diverse_beam": DecodeConfig("diverse_beam", k=DEFAULT_BEAM_WIDTH,
                                     groups=DEFAULT_BEAM_WIDTH, diversity=DEFAULT_DIVERSITY),
        "ancestral": DecodeConfig("ancestral", seed=0),
        "top_k": DecodeConfig("top_k", k=DEFAULT_TOP_K, seed=0),
        "nucleus": DecodeConfig("nucleus", top_p=DEFAULT_NUCLEUS_P, seed=0),
        "mbr": DecodeConfig("mbr", mbr_samples=DEFAULT_MBR_SAMPLES, seed=0),
    }


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_path: str
    model_path: str | None = None
    order: int = 2
    alpha: float = 0.1
    max_length: int = 30
    contexts: tuple[str, ...] | None = None
    context_prefix_len: int = 2
    strategies: Mapping[str, DecodeConfig] = field(default_factory=default_decode_suite)
    entropy_samples: int = 100
    seed: int = 0
    test_alpha: float = 0.01
    band_on: str = "total"  # or "normalized"
    hist_bin_width_total: float = 2.0
    hist_bin_width_normalized: float = 0.25
    report_path: str | None = None

    def validate(self) -> None:
        if self.band_on not in ("total", "normalized"):
            raise PipelineError("band_on must be 'total' or 'normalized'")
        if self.entropy_samples < 2:
            raise PipelineError("entropy_samples must be >= 2")
        if self.context_prefix_len < 1:
            raise PipelineError("context_prefix_len must be >= 1")
        names = list(self.strategies)
        if len(set(names)) != len(names):
            raise PipelineError("strategy names must be unique")
        for cfg in self.strategies.values():
            cfg.validate()


@dataclass(frozen=True)
class RatingsRecord:
    context_id: str
    system: str
    criterion: str
    rater_id: str
    score: int

    def __post_init__(self):
        if not 0 <= self.score <= 7:
            raise CorpusError(f"score {self.score} outside 0..7")


@dataclass(frozen=True)
class SystemOutput:
    system: str
    text: str
    profile: InformationProfile
    membership: str
    deviation: float


@dataclass(frozen=True)
class ContextResult:
    context: str
    reference_text: str
    estimate: EntropyEstimate
    sampled_information: tuple[float, ...]
    sampled_lengths: tuple[int, ...]
    outputs: tuple[SystemOutput, ...]


@dataclass(frozen=True)
class RatingsSummary:
    scores: dict
    ranks: dict
    rank1: dict
    top_rated: dict
    reference_rank1_rate: float
    band_test: BandTestResult | None
    band_test_note: str | None
    score_split_pooled: ScoreBandSplit
    score_split_by_system: dict
    score_vs_information: list


@dataclass(frozen=True)
class Report:
    schema_version: int
    band_on: str
    test_alpha: float
    settings: dict
    contexts: tuple[ContextResult, ...]
    histograms: dict
    ratings: RatingsSummary | None = None


def bin_values(values: Iterable[float], width: float) -> list[tuple[float, float, int]]:
    """Histogram with bins centered on multiples of ``width``; each bin
    covers [center - width/2, center + width/2)."""
    if width <= 0:
        raise ValueError("bin width must be positive")
    counts: dict[int, int] = {}
    for v in values:
        idx = math.floor(v / width + 0.5)
        counts[idx] = counts.get(idx, 0) + 1
    out = []
    for idx in sorted(counts):
        lo = (idx - 0.5) * width
        out.append((lo, lo + width, counts[idx]))
    return out


def derive_contexts(corpus: list[str], prefix_len: int) -> list[tuple[str, str]]:
    """Distinct line prefixes in first-appearance order, each paired with
    the continuation of the first line carrying that prefix."""
    seen: dict[str, str] = {}
    for line in corpus:
        prefix = line[:prefix_len]
        if prefix and prefix not in seen:
            seen[prefix] = line[len(prefix):]
    return list(seen.items())


def _reference_for(corpus: list[str], context: str) -> str:
    for line in corpus:
        if line.startswith(context) and len(line) > 0:
            return line[len(context):]
    raise PipelineError(f"no corpus line starts with context {context!r}")


def _band_value(profile: InformationProfile, band_on: str) -> float:
    return profile.normalized if band_on == "normalized" else profile.total


def run_experiment(config: ExperimentConfig) -> Report:
    """Execute the full pipeline; deterministic given the config and seed."""
    config.validate()
    corpus = read_corpus(config.corpus_path)
    if config.model_path:
        model = load_ngram(config.model_path)
    else:
        model = train_ngram(corpus, config.order, config.alpha, config.max_length)

    if config.contexts is not None:
        if len(set(config.contexts)) != len(config.contexts):
            raise PipelineError("contexts must be distinct")
        pairs = [(ctx, _reference_for(corpus, ctx)) for ctx in config.contexts]
    else:
        pairs = derive_contexts(corpus, config.context_prefix_len)
    if not pairs:
        raise PipelineError("no contexts could be derived from the corpus")

    strategy_names = list(config.strategies)
    results: list[ContextResult] = []
    for i, (context, reference) in enumerate(pairs):
        try:
            results.append(_run_context(model, config, strategy_names, i,
                                        context, reference))
        except InfobandError as exc:
            raise PipelineError(f"context {context!r}: {exc}") from exc

    settings = {
        "order": model.order,
        "alpha": model.alpha,
        "max_length": model.max_length,
        "vocab": list(model.vocabulary.symbols),
        "entropy_samples": config.entropy_samples,
        "seed": config.seed,
        "context_prefix_len": config.context_prefix_len,
        "hist_bin_width_total": config.hist_bin_width_total,
        "hist_bin_width_normalized": config.hist_bin_width_normalized,
        "strategies": {name: _config_to_dict(cfg) for name, cfg in config.strategies.items()},
    }
    histograms = _build_histograms(results, config)
    return Report(SCHEMA_VERSION, config.band_on, config.test_alpha,
                  settings, tuple(results), histograms)


def _run_context(model: NgramModel, config: ExperimentConfig,
                 strategy_names: list[str], i: int, context: str,
                 reference: str) -> ContextResult:
    cond = PromptConditionedModel(model, model.vocabulary.encode(context))
    info, lengths = sample_information(cond, config.entropy_samples,
                                       derive_seed(config.seed, i),
                                       return_lengths=True)
    if config.band_on == "normalized":
        estimate = estimate_from_values(info / [max(1, n) for n in lengths])
    else:
        estimate = estimate_from_values(info)

    outputs: list[SystemOutput] = []
    ref_seq = Sequence.from_text(reference, model.vocabulary)
    outputs.append(_scored_output(REFERENCE_SYSTEM, reference, cond, ref_seq,
                                  estimate, config.band_on))
    decoded: dict[str, Candidate] = {}
    mbr_names = [n for n in strategy_names if config.strategies[n].strategy == "mbr"]
    for j, name in enumerate(n for n in strategy_names if n not in mbr_names):
        cfg = with_seed(config.strategies[name], derive_seed(config.seed, i, j + 1))
        decoded[name] = decode_one(cond, cfg)
    extras = [c.sequence for c in decoded.values()]
    for j, name in enumerate(mbr_names):
        cfg = with_seed(config.strategies[name], derive_seed(config.seed, i, 1000 + j))
        decoded[name] = decode_one(cond, cfg, extra_candidates=extras)
    for name in strategy_names:
        cand = decoded[name]
        outputs.append(_scored_output(name, cand.sequence.text(model.vocabulary),
                                      cond, cand.sequence, estimate, config.band_on))
    return ContextResult(context, reference, estimate,
                         tuple(float(v) for v in info),
                         tuple(int(n) for n in lengths),
                         tuple(outputs))


def _scored_output(system: str, text: str, model: LanguageModel, seq: Sequence,
                   estimate: EntropyEstimate, band_on: str) -> SystemOutput:
    profile = information_content(model, seq)
    membership = band_membership(profile, estimate, normalized=(band_on == "normalized"))
    deviation = _band_value(profile, band_on) - estimate.mean
    return SystemOutput(system, text, profile, membership, deviation)


def _build_histograms(results: list[ContextResult], config: ExperimentConfig) -> dict:
    w_norm = config.hist_bin_width_normalized
    w_total = config.hist_bin_width_total
    norm: dict[str, list] = {}
    total: dict[str, list] = {}
    model_norm = []
    model_total = []
    for ctx in results:
        model_total.extend(ctx.sampled_information)
        model_norm.extend(v / max(1, n) for v, n in
                          zip(ctx.sampled_information, ctx.sampled_lengths))
        for out in ctx.outputs:
            norm.setdefault(out.system, []).append(out.profile.normalized)
            total.setdefault(out.system, []).append(out.profile.total)
    deviations = [out.deviation for ctx in results for out in ctx.outputs
                  if out.system == REFERENCE_SYSTEM]
    return {
        "information_normalized": {
            "model_samples": bin_values(model_norm, w_norm),
            **{sys: bin_values(vals, w_norm) for sys, vals in norm.items()},
        },
        "information_total": {
            "model_samples": bin_values(model_total, w_total),
            **{sys: bin_values(vals, w_total) for sys, vals in total.items()},
        },
        "deviation": {
            REFERENCE_SYSTEM: bin_values(deviations, w_total),
        },
    }


# --- ratings ------------------------------------------------------------

RATINGS_COLUMNS = ("context_id", "system", "criterion", "rater_id", "score")


def read_ratings_csv(path: str) -> list[RatingsRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(RATINGS_COLUMNS):
            raise CorpusError(
                f"ratings file must start with header {','.join(RATINGS_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise CorpusError(f"ratings line {lineno}: expected 5 columns, got {len(row)}")
            try:
                score = int(row[4])
            except ValueError:
                raise CorpusError(f"ratings line {lineno}: score {row[4]!r} is not an integer") from None
            try:
                records.append(RatingsRecord(row[0], row[1], row[2], row[3], score))
            except CorpusError as exc:
                raise CorpusError(f"ratings line {lineno}: {exc}") from None
    return records


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def join_ratings(report: Report, records: list[RatingsRecord],
                 chance_samples: int | None = None) -> Report:
    """Attach human scores to a report and run the band statistics.

    Per context and system, the score is the median across raters of each
    criterion, then the mean across criteria.  Ranks share the top rank on
    ties.  The rated set per context (reference plus the top-3 ranked
    model systems) feeds the band-versus-chance test; all scored strings
    feed the in-band versus out-of-band score comparison, pooled across
    strategies and also split per strategy.  Information values already in
    the report are never altered.
    """
    by_context = {ctx.context: ctx for ctx in report.contexts}
    known_systems = {(c.context, o.system) for c in report.contexts for o in c.outputs}
    raw: dict[tuple[str, str, str], dict[str, int]] = {}
    for rec in records:
        if rec.context_id not in by_context:
            raise PipelineError(f"ratings reference unknown context {rec.context_id!r}")
        if (rec.context_id, rec.system) not in known_systems:
            raise PipelineError(
                f"ratings reference unknown system {rec.system!r} for context {rec.context_id!r}"
            )
        raw.setdefault((rec.context_id, rec.system, rec.criterion), {})[rec.rater_id] = rec.score

    per_criterion: dict[tuple[str, str], list[float]] = {}
    for (ctx_id, system, _criterion), by_rater in raw.items():
        per_criterion.setdefault((ctx_id, system), []).append(
            _median([float(v) for v in by_rater.values()])
        )
    scores: dict[str, dict[str, float]] = {}
    for (ctx_id, system), medians in per_criterion.items():
        scores.setdefault(ctx_id, {})[system] = sum(medians) / len(medians)

    ranks: dict[str, dict[str, int]] = {}
    rank1: dict[str, list[str]] = {}
    top_rated: dict[str, list[str]] = {}
    ref_first = 0
    for ctx_id, sys_scores in scores.items():
        ordered = sorted(sys_scores.items(), key=lambda kv: (-kv[1], kv[0]))
        ctx_ranks = {}
        for system, value in ordered:
            ctx_ranks[system] = 1 + sum(1 for v in sys_scores.values() if v > value)
        ranks[ctx_id] = ctx_ranks
        rank1[ctx_id] = sorted(s for s, r in ctx_ranks.items() if r == 1)
        if ctx_ranks.get(REFERENCE_SYSTEM) == 1:
            ref_first += 1
        top_rated[ctx_id] = [s for s, _ in ordered if s != REFERENCE_SYSTEM][:3]
    reference_rank1_rate = ref_first / len(scores) if scores else 0.0

    normalized = report.band_on == "normalized"
    estimates = {c.context: c.estimate for c in report.contexts}
    rated_values: dict[str, list[float]] = {}
    sample_values: dict[str, list[float]] = {}
    for ctx_id in scores:
        ctx = by_context[ctx_id]
        outputs = {o.system: o for o in ctx.outputs}
        rated_set = [REFERENCE_SYSTEM, *top_rated[ctx_id]]
        rated_values[ctx_id] = [_band_value(outputs[s].profile, report.band_on)
                                for s in rated_set if s in outputs]
        values = ctx.sampled_information
        if normalized:
            values = tuple(v / max(1, n) for v, n in zip(values, ctx.sampled_lengths))
        if chance_samples is not None:
            values = values[:chance_samples]
        sample_values[ctx_id] = list(values)

    band_test = None
    band_note = None
    try:
        band_test = band_vs_chance_test(rated_values, sample_values, estimates,
                                        alpha=report.test_alpha, normalized=False)
    except (DegenerateSamplesError, ValueError) as exc:
        band_note = str(exc)

    pooled_items = []
    per_system_items: dict[str, list] = {}
    score_info_pairs = []
    for ctx_id, sys_scores in scores.items():
        ctx = by_context[ctx_id]
        outputs = {o.system: o for o in ctx.outputs}
        for system, value in sys_scores.items():
            item = (ctx_id, _band_value(outputs[system].profile, report.band_on), value)
            pooled_items.append(item)
            per_system_items.setdefault(system, []).append(item)
            score_info_pairs.append((outputs[system].profile.normalized, value))
    split_pooled = score_band_split(pooled_items, estimates)
    split_by_system = {system: score_band_split(items, estimates)
                       for system, items in sorted(per_system_items.items())}

    width = report.settings["hist_bin_width_normalized"]
    binned: dict[int, list[float]] = {}
    for info, value in score_info_pairs:
        binned.setdefault(math.floor(info / width + 0.5), []).append(value)
    score_vs_information = []
    for idx in sorted(binned):
        lo = (idx - 0.5) * width
        vals = binned[idx]
        score_vs_information.append((lo, lo + width, sum(vals) / len(vals), len(vals)))

    summary = RatingsSummary(scores, ranks, rank1, top_rated, reference_rank1_rate,
                             band_test, band_note, split_pooled, split_by_system,
                             score_vs_information)
    return replace(report, ratings=summary)


# --- serialization ------------------------------------------------------

def _config_to_dict(cfg: DecodeConfig) -> dict:
    out = {"strategy": cfg.strategy}
    for name in ("k", "groups", "diversity", "top_p", "mbr_samples", "seed"):
        value = getattr(cfg, name)
        if value is not None:
            out[name] = value
    return out


def _config_from_dict(data: Mapping) -> DecodeConfig:
    return DecodeConfig(**data)


def _profile_to_dict(profile: InformationProfile) -> dict:
    return {
        "tokens": list(profile.sequence.tokens),
        "total": float(profile.total),
        "surprisals": [float(s) for s in profile.surprisals],
        "normalized": float(profile.normalized),
    }


def _profile_from_dict(data: Mapping) -> InformationProfile:
    return InformationProfile(Sequence(tuple(data["tokens"])), float(data["total"]),
                              tuple(float(s) for s in data["surprisals"]),
                              float(data["normalized"]))


def report_to_dict(report: Report) -> dict:
    contexts = []
    for ctx in report.contexts:
        contexts.append({
            "context": ctx.context,
            "reference": ctx.reference_text,
            "estimate": {
                "mean": float(ctx.estimate.mean),
                "std": float(ctx.estimate.std),
                "count": int(ctx.estimate.count),
                "stderr": float(ctx.estimate.stderr),
            },
            "sampled_information": [float(v) for v in ctx.sampled_information],
            "sampled_lengths": [int(v) for v in ctx.sampled_lengths],
            "outputs": [
                {
                    "system": o.system,
                    "text": o.text,
                    "profile": _profile_to_dict(o.profile),
                    "membership": o.membership,
                    "deviation": float(o.deviation),
                }
                for o in ctx.outputs
            ],
        })
    out = {
        "schema_version": report.schema_version,
        "band_on": report.band_on,
        "test_alpha": float(report.test_alpha),
        "settings": report.settings,
        "contexts": contexts,
        "histograms": report.histograms,
        "ratings": None,
    }
    if report.ratings:
        r = report.ratings
        out["ratings"] = {
            "scores": r.scores,
            "ranks": r.ranks,
            "rank1": r.rank1,
            "top_rated": r.top_rated,
            "reference_rank1_rate": float(r.reference_rank1_rate),
            "band_test": r.band_test.to_dict() if r.band_test else None,
            "band_test_note": r.band_test_note,
            "score_split_pooled": r.score_split_pooled.to_dict(),
            "score_split_by_system": {s: v.to_dict() for s, v in r.score_split_by_system.items()},
            "score_vs_information": [list(row) for row in r.score_vs_information],
        }
    return out


def report_from_dict(data: Mapping) -> Report:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise PipelineError(f"unsupported report schema version {data.get('schema_version')!r}")
    contexts = []
    for ctx in data["contexts"]:
        est = ctx["estimate"]
        contexts.append(ContextResult(
            ctx["context"], ctx["reference"],
            EntropyEstimate(float(est["mean"]), float(est["std"]), int(est["count"])),
            tuple(float(v) for v in ctx["sampled_information"]),
            tuple(int(v) for v in ctx["sampled_lengths"]),
            tuple(SystemOutput(o["system"], o["text"], _profile_from_dict(o["profile"]),
                               o["membership"], float(o["deviation"]))
                  for o in ctx["outputs"]),
        ))
    # Histogram bin rows arrive as JSON lists; normalize to tuples.
    histograms = {
        group: {sys: [tuple(row) for row in rows] for sys, rows in tables.items()}
        for group, tables in data["histograms"].items()
    }
    return Report(SCHEMA_VERSION, data["band_on"], float(data["test_alpha"]),
                  dict(data["settings"]), tuple(contexts), histograms)


def report_json(report: Report) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def emit_report(report: Report, path: str, fmt: str = "json") -> list[str]:
    """Write the report; ``json`` writes one file, ``csv-bundle`` writes a
    directory with one CSV per figure-style analysis.  Returns the paths."""
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report_json(report))
        return [path]
    if fmt != "csv-bundle":
        raise PipelineError(f"unknown report format {fmt!r}")
    os.makedirs(path, exist_ok=True)
    written = []

    def _write(name: str, header: list[str], rows: Iterable[Iterable]) -> None:
        full = os.path.join(path, name)
        with open(full, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        written.append(full)

    for group, suffix in (("information_normalized", "normalized"),
                          ("information_total", "total")):
        rows = []
        for system in sorted(report.histograms[group]):
            for lo, hi, count in report.histograms[group][system]:
                rows.append([system, lo, hi, count])
        _write(f"information_histogram_{suffix}.csv",
               ["system", "bin_lo", "bin_hi", "count"], rows)
    _write("deviation_values.csv", ["context", "system", "deviation"],
           [[ctx.context, o.system, o.deviation]
            for ctx in report.contexts for o in ctx.outputs])
    rows = []
    for system in sorted(report.histograms["deviation"]):
        for lo, hi, count in report.histograms["deviation"][system]:
            rows.append([system, lo, hi, count])
    _write("deviation_histogram.csv", ["system", "bin_lo", "bin_hi", "count"], rows)
    if report.ratings:
        _write("score_vs_information.csv",
               ["bin_lo", "bin_hi", "mean_score", "count"],
               [list(row) for row in report.ratings.score_vs_information])
        rows = []
        pools = [("pooled", report.ratings.score_split_pooled)]
        pools.extend(sorted(report.ratings.score_split_by_system.items()))
        for name, split in pools:
            test = split.test
            for cell in ("inside", "outside", "above", "below"):
                vals = getattr(split, cell)
                mean = sum(vals) / len(vals) if vals else ""
                rows.append([name, cell, len(vals), mean,
                             test.t if test else "", test.p_value if test else ""])
        _write("band_split_summary.csv",
               ["pooling", "cell", "count", "mean_score", "t", "p_value"], rows)
    return written
