"""Decoding strategies over the LanguageModel interface.

Implements greedy search, beam search (raw total log-probability, no
length normalization), diverse beam search with a same-timestep Hamming
penalty against earlier groups, ancestral sampling, top-k and nucleus
truncated sampling, and sample-based minimum-risk selection with an
n-gram-overlap utility.

Determinism rules used throughout: probability ties truncate or select the
lowest token index; candidate ties order by lexicographic token sequence;
stochastic decoders are reproducible functions of (model, config, seed).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .lm import LanguageModel, Sequence, sequence_log_prob, step_options

STRATEGIES = ("greedy", "beam", "diverse_beam", "ancestral", "top_k", "nucleus", "mbr")
_STOCHASTIC = {"ancestral", "top_k", "nucleus", "mbr"}

# Defaults used by the experiment pipeline's standard strategy suite.
DEFAULT_BEAM_WIDTH = 5
DEFAULT_DIVERSITY = 0.7
DEFAULT_TOP_K = 30
DEFAULT_NUCLEUS_P = 0.85
DEFAULT_MBR_SAMPLES = 32


@dataclass(frozen=True)
class DecodeConfig:
    """Strategy tag plus exactly the parameters that strategy requires."""

    strategy: str
    k: int | None = None
    groups: int | None = None
    diversity: float | None = None
    top_p: float | None = None
    mbr_samples: int | None = None
    seed: int | None = None

    _REQUIRED = {
        "greedy": (),
        "beam": ("k",),
        "diverse_beam": ("k", "groups", "diversity"),
        "ancestral": ("seed",),
        "top_k": ("k", "seed"),
        "nucleus": ("top_p", "seed"),
        "mbr": ("mbr_samples", "seed"),
    }

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        required = set(self._REQUIRED[self.strategy])
        for name in ("k", "groups", "diversity", "top_p", "mbr_samples", "seed"):
            value = getattr(self, name)
            if name in required and value is None:
                raise ValueError(f"strategy {self.strategy!r} requires {name}")
            if name not in required and value is not None:
                raise ValueError(f"strategy {self.strategy!r} does not accept {name}")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.groups is not None:
            if not 1 <= self.groups <= self.k or self.k % self.groups:
                raise ValueError("need 1 <= groups <= k with groups dividing k")
        if self.diversity is not None and self.diversity < 0:
            raise ValueError("diversity penalty must be >= 0")
        if self.top_p is not None and not 0.0 < self.top_p <= 1.0:
            raise ValueError("nucleus mass must lie in (0, 1]")
        if self.mbr_samples is not None and self.mbr_samples < 1:
            raise ValueError("mbr_samples must be >= 1")


@dataclass(frozen=True)
class Candidate:
    """A decoded sequence with its total log-probability under the model."""

    sequence: Sequence
    log_prob: float


def greedy_decode(model: LanguageModel) -> Candidate:
    """Argmax token at every step; ties resolve to the lowest token index."""
    eos = model.vocabulary.eos_id
    prefix: tuple[int, ...] = (model.vocabulary.bos_id,)
    total = 0.0
    while True:
        dist = model.next_distribution(prefix)
        tok = int(np.argmax(dist))
        total += math.log(float(dist[tok]))
        prefix += (tok,)
        if tok == eos:
            return Candidate(Sequence(prefix), total)


def beam_search(model: LanguageModel, k: int) -> list[Candidate]:
    """Width-``k`` beam over raw total log-probability.

    Finished hypotheses retire into a pool; the top ``k`` finished are
    returned best-first, ties by lexicographic token order.  With ``k`` at
    least the support size this is exhaustive and the first candidate is
    the model's mode.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    eos = model.vocabulary.eos_id
    memo: dict = {}
    active: list[tuple[tuple[int, ...], float]] = [((model.vocabulary.bos_id,), 0.0)]
    finished: list[tuple[tuple[int, ...], float]] = []
    while active:
        expansions: list[tuple[tuple[int, ...], float]] = []
        for prefix, lp in active:
            for tok, lq in step_options(model, prefix, memo):
                expansions.append(((*prefix, tok), lp + lq))
        # EOS expansions compete for beam slots; selected ones retire.
        expansions.sort(key=lambda e: (-e[1], e[0]))
        active = []
        for toks, lp in expansions[:k]:
            if toks[-1] == eos:
                finished.append((toks, lp))
            else:
                active.append((toks, lp))
    finished.sort(key=lambda e: (-e[1], e[0]))
    return [Candidate(Sequence(toks), lp) for toks, lp in finished[:k]]


def diverse_beam_search(model: LanguageModel, k: int, groups: int,
                        diversity: float) -> list[Candidate]:
    """Beam search in ``groups`` groups of width ``k / groups``.

    Groups expand in order at each timestep; a group's step score is the
    log-probability minus ``diversity`` times the number of earlier groups'
    beams that chose the same token at this timestep.  Selection within a
    group follows :func:`beam_search` on the penalized cumulative score;
    reported log-probabilities are always the true model scores.
    """
    if groups < 1 or k < 1 or k % groups:
        raise ValueError("need 1 <= groups <= k with groups dividing k")
    if diversity < 0:
        raise ValueError("diversity penalty must be >= 0")
    width = k // groups
    eos = model.vocabulary.eos_id
    memo: dict = {}
    # Per-group state: (tokens, penalized score, true log-prob).
    Beam = tuple[tuple[int, ...], float, float]
    start: Beam = ((model.vocabulary.bos_id,), 0.0, 0.0)
    active: list[list[Beam]] = [[start] for _ in range(groups)]
    done: list[list[Beam]] = [[] for _ in range(groups)]
    while any(active):
        chosen: Counter[int] = Counter()
        for g in range(groups):
            expansions: list[Beam] = []
            for prefix, score, lp in active[g]:
                for tok, lq in step_options(model, prefix, memo):
                    penalty = diversity * chosen[tok]
                    expansions.append(((*prefix, tok), score + lq - penalty, lp + lq))
            # As in beam_search, EOS expansions compete for the group's slots.
            expansions.sort(key=lambda b: (-b[1], b[0]))
            active[g] = []
            for beam in expansions[:width]:
                chosen[beam[0][-1]] += 1
                if beam[0][-1] == eos:
                    done[g].append(beam)
                else:
                    active[g].append(beam)
    out: list[Candidate] = []
    for g in range(groups):
        best = sorted(done[g], key=lambda b: (-b[1], b[0]))[:width]
        out.extend(Candidate(Sequence(toks), lp) for toks, _, lp in best)
    return out


def _sample_step(dist: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(dist)
    tok = int(np.searchsorted(cum, rng.random(), side="right"))
    last_pos = int(np.flatnonzero(dist > 0)[-1])
    return min(tok, last_pos)


def _sample_sequence(model: LanguageModel, rng: np.random.Generator,
                     transform: Callable[[np.ndarray], np.ndarray] | None = None) -> Candidate:
    eos = model.vocabulary.eos_id
    prefix: tuple[int, ...] = (model.vocabulary.bos_id,)
    total = 0.0
    while True:
        dist = np.asarray(model.next_distribution(prefix), dtype=float)
        draw_from = dist if transform is None else transform(dist)
        tok = _sample_step(draw_from, rng)
        total += math.log(float(dist[tok]))
        prefix += (tok,)
        if tok == eos:
            return Candidate(Sequence(prefix), total)


def ancestral_sample(model: LanguageModel, seed: int) -> Candidate:
    """One token per step from the unmodified conditional; seeded."""
    return _sample_sequence(model, np.random.default_rng(seed))


def truncate_top_k(dist: np.ndarray, k: int) -> np.ndarray:
    """Keep the ``k`` highest-probability tokens (ties to the lowest index)
    and renormalize; ``k`` beyond the support clamps to the full support."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = dist.shape[0]
    if k >= n:
        return dist
    order = np.lexsort((np.arange(n), -dist))
    out = np.zeros_like(dist)
    keep = order[:k]
    out[keep] = dist[keep]
    return out / out.sum()


def truncate_nucleus(dist: np.ndarray, p: float) -> np.ndarray:
    """Keep the smallest descending-probability prefix with mass >= ``p``
    and renormalize."""
    if not 0.0 < p <= 1.0:
        raise ValueError("nucleus mass must lie in (0, 1]")
    n = dist.shape[0]
    order = np.lexsort((np.arange(n), -dist))
    cum = np.cumsum(dist[order])
    nkeep = int(np.searchsorted(cum, p - 1e-12, side="left")) + 1
    keep = order[:min(nkeep, n)]
    out = np.zeros_like(dist)
    out[keep] = dist[keep]
    return out / out.sum()


def top_k_sample(model: LanguageModel, k: int, seed: int) -> Candidate:
    """Sample each step from the top-``k`` truncated conditional."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    return _sample_sequence(model, rng, lambda d: truncate_top_k(d, k))


def nucleus_sample(model: LanguageModel, p: float, seed: int) -> Candidate:
    """Sample each step from the nucleus (top-``p``) truncated conditional."""
    if not 0.0 < p <= 1.0:
        raise ValueError("nucleus mass must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    return _sample_sequence(model, rng, lambda d: truncate_nucleus(d, p))


def utility_ngram_overlap(a: Sequence, b: Sequence, max_n: int = 2) -> float:
    """Clipped n-gram precision of ``a`` against ``b``, averaged over orders.

    Interior tokens only; orders longer than ``a`` are skipped.  An empty
    ``a`` scores 1 against an empty ``b`` and 0 against a non-empty one.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    ia, ib = a.interior, b.interior
    if not ia:
        return 1.0 if not ib else 0.0
    scores = []
    for n in range(1, min(max_n, len(ia)) + 1):
        grams_a = Counter(ia[i:i + n] for i in range(len(ia) - n + 1))
        grams_b = Counter(ib[i:i + n] for i in range(len(ib) - n + 1))
        matched = sum(min(c, grams_b[g]) for g, c in grams_a.items())
        scores.append(matched / sum(grams_a.values()))
    return sum(scores) / len(scores)


def mbr_decode(model: LanguageModel, mbr_samples: int, seed: int,
               utility: Callable[[Sequence, Sequence], float] | None = None,
               extra_candidates: Iterable[Sequence] = ()) -> Candidate:
    """Pick the candidate with the highest mean utility against sampled
    pseudo-references.

    Draws ``mbr_samples`` ancestral samples; the candidate set is the
    deduplicated samples plus ``extra_candidates``, while all samples
    (duplicates included) stay as pseudo-references.  Ties break by higher
    log-probability, then lexicographic token order.
    """
    if mbr_samples < 1:
        raise ValueError("mbr_samples must be >= 1")
    if utility is None:
        utility = utility_ngram_overlap
    rng = np.random.default_rng(seed)
    samples = [_sample_sequence(model, rng) for _ in range(mbr_samples)]
    candidates: dict[tuple[int, ...], Candidate] = {}
    for cand in samples:
        candidates.setdefault(cand.sequence.tokens, cand)
    for seq in extra_candidates:
        if seq.tokens not in candidates:
            candidates[seq.tokens] = Candidate(seq, sequence_log_prob(model, seq))
    def risk_key(cand: Candidate):
        gain = sum(utility(cand.sequence, s.sequence) for s in samples) / len(samples)
        return (-gain, -cand.log_prob, cand.sequence.tokens)
    return min(candidates.values(), key=risk_key)


def decode(model: LanguageModel, config: DecodeConfig,
           extra_candidates: Iterable[Sequence] = ()) -> list[Candidate]:
    """Run one strategy described by ``config``; beam-style strategies
    return their full candidate list, all others a single candidate."""
    config.validate()
    s = config.strategy
    if s == "greedy":
        return [greedy_decode(model)]
    if s == "beam":
        return beam_search(model, config.k)
    if s == "diverse_beam":
        return diverse_beam_search(model, config.k, config.groups, config.diversity)
    if s == "ancestral":
        return [ancestral_sample(model, config.seed)]
    if s == "top_k":
        return [top_k_sample(model, config.k, config.seed)]
    if s == "nucleus":
        return [nucleus_sample(model, config.top_p, config.seed)]
    return [mbr_decode(model, config.mbr_samples, config.seed,
                       extra_candidates=extra_candidates)]


def decode_one(model: LanguageModel, config: DecodeConfig,
               extra_candidates: Iterable[Sequence] = ()) -> Candidate:
    """Single representative output: the best returned candidate by true
    log-probability, ties by lexicographic token order."""
    cands = decode(model, config, extra_candidates)
    return min(cands, key=lambda c: (-c.log_prob, c.sequence.tokens))


def with_seed(config: DecodeConfig, seed: int) -> DecodeConfig:
    """Copy of ``config`` with the seed replaced (no-op for deterministic
    strategies)."""
    if config.strategy in _STOCHASTIC:
        return replace(config, seed=seed)
    return config
