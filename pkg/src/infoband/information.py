"""Information content, exact entropy, and Monte Carlo entropy estimates.

All quantities are in nats.  The information content of a sequence is its
negative log-probability under the model; entropy is its expectation,
computed exactly by support enumeration or estimated from i.i.d. ancestral
samples together with the sample standard deviation of information values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence as SequenceT

import numpy as np

from .lm import LanguageModel, Sequence, enumerate_support


@dataclass(frozen=True)
class InformationProfile:
    """Total and per-step information of one sequence under one model.

    ``surprisals`` covers every generation step including EOS.  When a step
    has probability zero the surprisal is ``inf`` and later steps (which
    condition on an impossible prefix) are omitted.  ``normalized`` divides
    by the interior length; an empty interior reports the raw EOS surprisal.
    """

    sequence: Sequence
    total: float
    surprisals: tuple[float, ...]
    normalized: float


@dataclass(frozen=True)
class EntropyEstimate:
    """Monte Carlo entropy: sample mean, sample std (Bessel), and count."""

    mean: float
    std: float
    count: int

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.count)


def information_content(model: LanguageModel, y: Sequence) -> InformationProfile:
    """Per-token surprisals and their sum for ``y`` under ``model``."""
    y.validate(model.vocabulary, model.max_length)
    prefix: tuple[int, ...] = (model.vocabulary.bos_id,)
    surprisals: list[float] = []
    for tok in y.tokens[1:]:
        p = float(model.next_distribution(prefix)[tok])
        if p <= 0.0:
            surprisals.append(float("inf"))
            break
        surprisals.append(-math.log(p))
        prefix += (tok,)
    total = sum(surprisals)
    denom = max(1, y.interior_length)
    return InformationProfile(y, total, tuple(surprisals), total / denom)


def exact_entropy(model: LanguageModel, cap: int) -> tuple[float, float]:
    """Entropy of the model and the exact standard deviation of information.

    Computed by full support enumeration: ``H = sum q * I`` and
    ``sigma = sqrt(sum q * (I - H)^2)``.
    """
    mass = 0.0
    first = 0.0
    second = 0.0
    for _, lp in enumerate_support(model, cap):
        q = math.exp(lp)
        mass += q
        first += q * (-lp)
        second += q * lp * lp
    h = first / mass
    var = second / mass - h * h
    return h, math.sqrt(max(var, 0.0))


def derive_seed(master: int, *path: int) -> int:
    """Deterministic child seed from a master seed and integer coordinates."""
    ss = np.random.SeedSequence([int(master), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_information(model: LanguageModel, count: int, seed: int,
                       return_lengths: bool = False):
    """Information values of ``count`` i.i.d. ancestral samples from the model.

    Sampling runs all draws in parallel on the model's distribution
    signatures (a state machine over conditioning states), so enumerable
    models sample in vectorized batches.  Deterministic given the seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    eos = model.vocabulary.eos_id

    reps: list[tuple[int, ...]] = []          # representative prefix per state
    tables: list[tuple[np.ndarray, np.ndarray, int]] = []  # (cumsum, -log p, last positive)
    sig_to_id: dict = {}
    trans: dict[tuple[int, int], int] = {}

    def state_for(prefix: tuple[int, ...]) -> int:
        sig = model.distribution_signature(prefix)
        sid = sig_to_id.get(sig)
        if sid is None:
            sid = len(reps)
            sig_to_id[sig] = sid
            reps.append(prefix)
            dist = np.asarray(model.next_distribution(prefix), dtype=float)
            with np.errstate(divide="ignore"):
                surp = -np.log(dist)
            positive = np.flatnonzero(dist > 0)
            tables.append((np.cumsum(dist), surp, int(positive[-1])))
        return sid

    start = state_for((model.vocabulary.bos_id,))
    state = np.full(count, start, dtype=np.int64)
    info = np.zeros(count)
    lengths = np.zeros(count, dtype=np.int64)
    active = np.arange(count)
    while active.size:
        survivors = []
        states_now = state[active]
        for sid in np.unique(states_now):
            members = active[states_now == sid]
            cum, surp, last_pos = tables[sid]
            u = rng.random(members.size)
            toks = np.searchsorted(cum, u, side="right")
            # Floating-point cumsum may fall just short of 1; clamp to the
            # last positive-probability token.
            toks = np.minimum(toks, last_pos)
            info[members] += surp[toks]
            cont = toks != eos
            lengths[members[cont]] += 1
            for tok in np.unique(toks[cont]):
                key = (int(sid), int(tok))
                nxt = trans.get(key)
                if nxt is None:
                    nxt = state_for((*reps[sid], int(tok)))
                    trans[key] = nxt
                state[members[(toks == tok)]] = nxt
            survivors.append(members[cont])
        active = np.sort(np.concatenate(survivors)) if survivors else np.empty(0, dtype=np.int64)
    if return_lengths:
        return info, lengths
    return info


def estimate_from_values(values: SequenceT[float] | np.ndarray) -> EntropyEstimate:
    arr = np.asarray(values, dtype=float)
    if arr.size < 1:
        raise ValueError("need at least one value")
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return EntropyEstimate(float(arr.mean()), std, int(arr.size))


def mc_entropy(model: LanguageModel, count: int, seed: int) -> EntropyEstimate:
    """Monte Carlo entropy estimate from ``count`` ancestral samples."""
    return estimate_from_values(sample_information(model, count, seed))


@dataclass(frozen=True)
class SweepResult:
    """Per-context entropy estimates plus per-context factory failures."""

    estimates: dict[str, EntropyEstimate]
    failures: dict[str, str]


def conditional_entropy_sweep(model_factory: Callable[[str], LanguageModel],
                              contexts: Iterable[str], count: int,
                              seed: int) -> SweepResult:
    """One :func:`mc_entropy` per context with independently derived seeds.

    Child seeds combine the master seed with the context ordinal, so the
    result depends only on the seed and the context ordering.  A factory
    failure is recorded per context and the sweep continues.
    """
    contexts = list(contexts)
    if not contexts:
        raise ValueError("contexts must be non-empty")
    estimates: dict[str, EntropyEstimate] = {}
    failures: dict[str, str] = {}
    for i, ctx in enumerate(contexts):
        try:
            model = model_factory(ctx)
        except Exception as exc:  # noqa: BLE001 - reported per context by contract
            failures[ctx] = str(exc)
            continue
        estimates[ctx] = mc_entropy(model, count, derive_seed(seed, i))
    return SweepResult(estimates, failures)
