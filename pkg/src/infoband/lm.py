"""Exact toy autoregressive language models over small vocabularies.

A sequence is a tuple of integer token ids: a reserved BOS id first, a
reserved EOS id last, and interior symbol ids in between.  Symbol ids run
``0..V-1``, EOS is ``V`` and BOS is ``V+1``, so a next-token distribution
is a vector of length ``V+1`` (symbols plus EOS; BOS is never predicted).

Every model is immutable after construction, bounds its interior length by
``max_length`` (EOS is forced with probability one at the bound), and is
exactly enumerable, which keeps log-probabilities, entropies and typical
sets computable without approximation at small scale.
"""

from __future__ import annotations

import abc
import json
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Iterator, Mapping

import numpy as np

from .errors import CorpusError, ModelError, SequenceError, SupportCapExceeded

EOS_KEY = "<eos>"

# A next-token distribution: non-negative vector over symbols plus EOS,
# summing to one within 1e-9.
NextTokenDistribution = np.ndarray


@dataclass(frozen=True)
class Vocabulary:
    """Ordered set of distinct symbols with reserved EOS/BOS ids above it."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise SequenceError("vocabulary must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise SequenceError("vocabulary symbols must be unique")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def eos_id(self) -> int:
        return len(self.symbols)

    @property
    def bos_id(self) -> int:
        return len(self.symbols) + 1

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise SequenceError(f"symbol {symbol!r} not in vocabulary") from None

    def encode(self, text: str) -> tuple[int, ...]:
        """Character-level tokenization of ``text`` into symbol ids."""
        lookup = {s: i for i, s in enumerate(self.symbols)}
        try:
            return tuple(lookup[ch] for ch in text)
        except KeyError as exc:
            raise SequenceError(f"character {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: Iterable[int]) -> str:
        return "".join(self.symbols[i] for i in ids)


@dataclass(frozen=True)
class Sequence:
    """BOS-initiated, EOS-terminated token id tuple."""

    tokens: tuple[int, ...]

    @classmethod
    def from_interior(cls, interior: Iterable[int], vocab: Vocabulary) -> "Sequence":
        return cls((vocab.bos_id, *interior, vocab.eos_id))

    @classmethod
    def from_text(cls, text: str, vocab: Vocabulary) -> "Sequence":
        return cls.from_interior(vocab.encode(text), vocab)

    @property
    def interior(self) -> tuple[int, ...]:
        return self.tokens[1:-1]

    @property
    def interior_length(self) -> int:
        return len(self.tokens) - 2

    def text(self, vocab: Vocabulary) -> str:
        return vocab.decode(self.interior)

    def validate(self, vocab: Vocabulary, max_length: int) -> None:
        toks = self.tokens
        if len(toks) < 2 or toks[0] != vocab.bos_id or toks[-1] != vocab.eos_id:
            raise SequenceError("sequence must start with BOS and end with EOS")
        for t in toks[1:-1]:
            if t == vocab.bos_id or t == vocab.eos_id:
                raise SequenceError("BOS/EOS may not appear in the interior")
            if not 0 <= t < vocab.size:
                raise SequenceError(f"token id {t} outside vocabulary of size {vocab.size}")
        if self.interior_length > max_length:
            raise SequenceError(
                f"interior length {self.interior_length} exceeds max_length {max_length}"
            )


def check_next_distribution(dist: NextTokenDistribution, vocab: Vocabulary,
                            at_max_length: bool = False) -> None:
    """Assert the distribution contract; used by property tests."""
    if dist.shape != (vocab.size + 1,):
        raise ModelError(f"distribution has shape {dist.shape}, expected ({vocab.size + 1},)")
    if np.any(dist < 0):
        raise ModelError("distribution has negative entries")
    total = float(dist.sum())
    if abs(total - 1.0) > 1e-9:
        raise ModelError(f"distribution sums to {total!r}, not 1 within 1e-9")
    if at_max_length and dist[vocab.eos_id] != 1.0:
        raise ModelError("EOS probability must be exactly 1 at max interior length")


class LanguageModel(abc.ABC):
    """Deterministic next-token distributions over a bounded string space.

    A prefix is a BOS-initiated token tuple without EOS.  Implementations
    must be immutable and must force EOS with probability one once the
    interior length reaches ``max_length``.

    ``distribution_signature`` returns a hashable state key such that equal
    keys imply equal ``next_distribution`` outputs, and the key of
    ``prefix + (token,)`` is determined by the key of ``prefix`` plus the
    token.  The default (the full prefix) is always correct; models with
    small conditioning state override it so that enumeration and batched
    sampling can share work across prefixes.
    """

    vocabulary: Vocabulary
    max_length: int

    @abc.abstractmethod
    def next_distribution(self, prefix: tuple[int, ...]) -> NextTokenDistribution:
        """Distribution over symbols plus EOS given a BOS-initiated prefix."""

    def distribution_signature(self, prefix: tuple[int, ...]) -> Hashable:
        return tuple(prefix)

    def _eos_forced(self) -> NextTokenDistribution:
        vec = np.zeros(self.vocabulary.size + 1)
        vec[self.vocabulary.eos_id] = 1.0
        return vec


def _padded_context(prefix: tuple[int, ...], order: int, bos_id: int) -> tuple[int, ...]:
    ctx = prefix[-order:]
    if len(ctx) < order:
        ctx = (bos_id,) * (order - len(ctx)) + ctx
    return ctx


class NgramModel(LanguageModel):
    """Count-based model conditioning on the previous ``order`` tokens.

    Conditionals are add-alpha smoothed relative frequencies,
    ``(count + alpha) / (total + alpha * (V + 1))``, where the denominator
    counts symbols plus EOS.  Contexts shorter than ``order`` (at the start
    of a sequence) are left-padded with BOS.
    """

    def __init__(self, vocabulary: Vocabulary, order: int, alpha: float,
                 max_length: int, counts: Mapping[tuple[int, ...], Mapping[int, int]]):
        if order < 1:
            raise ModelError("order must be >= 1")
        if alpha < 0:
            raise ModelError("alpha must be >= 0")
        if max_length < 0:
            raise ModelError("max_length must be >= 0")
        self.vocabulary = vocabulary
        self.order = order
        self.alpha = float(alpha)
        self.max_length = max_length
        self.counts = {tuple(ctx): dict(c) for ctx, c in counts.items()}
        self._cache: dict[tuple[int, ...], np.ndarray] = {}
        self._eos_vec = self._eos_forced()

    def _conditional(self, ctx: tuple[int, ...]) -> np.ndarray:
        vec = self._cache.get(ctx)
        if vec is None:
            n_out = self.vocabulary.size + 1
            ctx_counts = self.counts.get(ctx, {})
            total = sum(ctx_counts.values())
            denom = total + self.alpha * n_out
            if denom == 0:
                raise ModelError(
                    f"context {ctx!r} unseen and alpha=0; conditional undefined"
                )
            vec = np.full(n_out, self.alpha)
            for tok, c in ctx_counts.items():
                vec[tok] += c
            vec /= denom
            self._cache[ctx] = vec
        return vec

    def next_distribution(self, prefix: tuple[int, ...]) -> NextTokenDistribution:
        if len(prefix) - 1 >= self.max_length:
            return self._eos_vec
        return self._conditional(_padded_context(prefix, self.order, self.vocabulary.bos_id))

    def distribution_signature(self, prefix: tuple[int, ...]) -> Hashable:
        interior = len(prefix) - 1
        if interior >= self.max_length:
            return None
        # Interior length is part of the state so that stepping a signature
        # forward knows when it hits the forced-EOS bound.
        return (interior, _padded_context(prefix, self.order, self.vocabulary.bos_id))


def train_ngram(corpus: list[str], order: int, smoothing: float,
                max_length: int) -> NgramModel:
    """Fit an :class:`NgramModel` on one-string-per-line text.

    The vocabulary is the sorted set of characters observed in the corpus.
    Raises :class:`CorpusError` for an empty corpus or a line whose length
    exceeds ``max_length`` (the offending line index is reported).
    """
    if not corpus:
        raise CorpusError("corpus is empty")
    for i, line in enumerate(corpus):
        if len(line) > max_length:
            raise CorpusError(
                f"corpus line {i} has length {len(line)}, exceeding max_length {max_length}"
            )
    chars = sorted({ch for line in corpus for ch in line})
    if not chars:
        # All-empty corpus still needs a symbol for a well-formed vocabulary.
        raise CorpusError("corpus contains no characters; vocabulary would be empty")
    vocab = Vocabulary(tuple(chars))
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    for line in corpus:
        prefix: tuple[int, ...] = (vocab.bos_id,)
        for tok in (*vocab.encode(line), vocab.eos_id):
            ctx = _padded_context(prefix, order, vocab.bos_id)
            bucket = counts.setdefault(ctx, {})
            bucket[tok] = bucket.get(tok, 0) + 1
            prefix += (tok,)
    return NgramModel(vocab, order, smoothing, max_length, counts)


class TableModel(LanguageModel):
    """Explicit distribution over a finite set of sequences.

    Serves as an exact oracle: conditionals are derived from prefix masses,
    so the autoregressive factorization reproduces the table exactly.
    """

    def __init__(self, vocabulary: Vocabulary, table: Mapping[Sequence, float],
                 max_length: int | None = None):
        probs = {seq: float(p) for seq, p in table.items() if p != 0.0}
        if not probs:
            raise ModelError("table must contain at least one positive-probability sequence")
        total = math.fsum(probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"table probabilities sum to {total!r}, not 1 within 1e-9")
        if any(p < 0 for p in probs.values()):
            raise ModelError("table probabilities must be non-negative")
        longest = max(seq.interior_length for seq in probs)
        self.vocabulary = vocabulary
        self.max_length = longest if max_length is None else max_length
        for seq in probs:
            seq.validate(vocabulary, self.max_length)
        self.table = probs
        # Mass of every proper prefix (without EOS) and of every full sequence.
        self._prefix_mass: dict[tuple[int, ...], float] = {}
        for seq, p in probs.items():
            for k in range(1, len(seq.tokens)):
                pre = seq.tokens[:k]
                self._prefix_mass[pre] = self._prefix_mass.get(pre, 0.0) + p

    @classmethod
    def from_strings(cls, table: Mapping[str, float],
                     max_length: int | None = None) -> "TableModel":
        chars = sorted({ch for text in table for ch in text})
        vocab = Vocabulary(tuple(chars) if chars else ("_",))
        seqs = {Sequence.from_text(text, vocab): p for text, p in table.items()}
        return cls(vocab, seqs, max_length)

    def next_distribution(self, prefix: tuple[int, ...]) -> NextTokenDistribution:
        if len(prefix) - 1 >= self.max_length:
            return self._eos_forced()
        base = self._prefix_mass.get(tuple(prefix))
        if base is None or base <= 0:
            raise ModelError(f"prefix {prefix!r} has zero mass under the table")
        vec = np.zeros(self.vocabulary.size + 1)
        for tok in range(self.vocabulary.size):
            vec[tok] = self._prefix_mass.get((*prefix, tok), 0.0) / base
        exact = Sequence((*prefix, self.vocabulary.eos_id))
        vec[self.vocabulary.eos_id] = self.table.get(exact, 0.0) / base
        return vec


class IidModel(LanguageModel):
    """Fixed-length sequences of i.i.d. symbols; EOS forced at ``length``."""

    def __init__(self, vocabulary: Vocabulary, probs: Iterable[float], length: int,
                 max_length: int | None = None):
        p = np.asarray(list(probs), dtype=float)
        if p.shape != (vocabulary.size,):
            raise ModelError("need one probability per vocabulary symbol")
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise ModelError("symbol probabilities must be non-negative and sum to 1")
        self.vocabulary = vocabulary
        self.length = length
        self.max_length = length if max_length is None else max_length
        if not 0 <= length <= self.max_length:
            raise ModelError("need 0 <= length <= max_length")
        self._step = np.concatenate([p, [0.0]])
        self._eos_vec = self._eos_forced()

    @classmethod
    def coin(cls, p_heads: float, length: int) -> "IidModel":
        """Biased coin over symbols ('H', 'T')."""
        return cls(Vocabulary(("H", "T")), (p_heads, 1.0 - p_heads), length)

    def next_distribution(self, prefix: tuple[int, ...]) -> NextTokenDistribution:
        if len(prefix) - 1 >= self.length:
            return self._eos_vec
        return self._step

    def distribution_signature(self, prefix: tuple[int, ...]) -> Hashable:
        return min(len(prefix) - 1, self.length)


class PromptConditionedModel(LanguageModel):
    """Base model conditioned on a fixed interior prompt.

    Distributions over continuations: the wrapped model sees the prompt
    prepended to every prefix, so ``max_length`` shrinks by the prompt
    length and the base model's EOS forcing carries over.
    """

    def __init__(self, base: LanguageModel, prompt: tuple[int, ...]):
        for t in prompt:
            if not 0 <= t < base.vocabulary.size:
                raise SequenceError(f"prompt token id {t} outside vocabulary")
        if len(prompt) > base.max_length:
            raise SequenceError("prompt longer than the base model's max_length")
        self.base = base
        self.prompt = tuple(prompt)
        self.vocabulary = base.vocabulary
        self.max_length = base.max_length - len(prompt)

    def _extended(self, prefix: tuple[int, ...]) -> tuple[int, ...]:
        return (self.vocabulary.bos_id, *self.prompt, *prefix[1:])

    def next_distribution(self, prefix: tuple[int, ...]) -> NextTokenDistribution:
        return self.base.next_distribution(self._extended(prefix))

    def distribution_signature(self, prefix: tuple[int, ...]) -> Hashable:
        return self.base.distribution_signature(self._extended(prefix))


def sequence_log_prob(model: LanguageModel, y: Sequence) -> float:
    """Chain-rule log-probability of ``y`` in nats, including the EOS step.

    Returns ``-inf`` for sequences outside the model's support; raises
    :class:`SequenceError` for structurally invalid sequences.
    """
    y.validate(model.vocabulary, model.max_length)
    prefix: tuple[int, ...] = (model.vocabulary.bos_id,)
    total = 0.0
    for tok in y.tokens[1:]:
        p = float(model.next_distribution(prefix)[tok])
        if p <= 0.0:
            return float("-inf")
        total += math.log(p)
        prefix += (tok,)
    return total


def step_options(model: LanguageModel, prefix: tuple[int, ...],
                 memo: dict | None = None) -> list[tuple[int, float]]:
    """Positive-probability ``(token, log_prob)`` continuations of a prefix.

    ``memo`` (keyed by distribution signature) lets enumeration and search
    share conditionals across prefixes with equal state.
    """
    if memo is None:
        dist = model.next_distribution(prefix)
        return [(t, math.log(p)) for t, p in enumerate(dist) if p > 0.0]
    sig = model.distribution_signature(prefix)
    opts = memo.get(sig)
    if opts is None:
        dist = model.next_distribution(prefix)
        opts = [(t, math.log(p)) for t, p in enumerate(dist) if p > 0.0]
        memo[sig] = opts
    return opts


def enumerate_support(model: LanguageModel, cap: int) -> Iterator[tuple[Sequence, float]]:
    """Yield every positive-probability sequence with its log-probability.

    Depth-first over prefixes in ascending token order, pruning zero
    probability branches.  Raises :class:`SupportCapExceeded` when more
    than ``cap`` sequences would be produced.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    eos = model.vocabulary.eos_id
    memo: dict = {}
    count = 0
    # Stack entries: (prefix, log_prob, finished) where finished prefixes
    # already include EOS and are emitted when popped, which preserves
    # strict depth-first pre-order.
    stack: list[tuple[tuple[int, ...], float, bool]] = [((model.vocabulary.bos_id,), 0.0, False)]
    while stack:
        prefix, lp, finished = stack.pop()
        if finished:
            count += 1
            if count > cap:
                raise SupportCapExceeded(cap, count - 1)
            yield Sequence(prefix), lp
            continue
        for tok, lq in reversed(step_options(model, prefix, memo)):
            stack.append(((*prefix, tok), lp + lq, tok == eos))


# --- serialization -----------------------------------------------------

def ngram_to_dict(model: NgramModel) -> dict:
    """JSON-ready form: contexts keyed by their symbol string (BOS padding
    dropped; it is recovered from the order), EOS counts keyed by "<eos>"."""
    vocab = model.vocabulary
    counts_out: dict[str, dict[str, int]] = {}
    for ctx, bucket in sorted(model.counts.items()):
        key = "".join(vocab.symbols[t] for t in ctx if t != vocab.bos_id)
        row = {
            (EOS_KEY if tok == vocab.eos_id else vocab.symbols[tok]): int(c)
            for tok, c in sorted(bucket.items())
        }
        counts_out[key] = row
    return {
        "order": model.order,
        "alpha": model.alpha,
        "max_length": model.max_length,
        "vocab": list(vocab.symbols),
        "counts": counts_out,
    }


def ngram_from_dict(data: Mapping) -> NgramModel:
    vocab = Vocabulary(tuple(data["vocab"]))
    order = int(data["order"])
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    for key, row in data["counts"].items():
        tail = vocab.encode(key)
        ctx = (vocab.bos_id,) * (order - len(tail)) + tail
        counts[ctx] = {
            (vocab.eos_id if sym == EOS_KEY else vocab.index(sym)): int(c)
            for sym, c in row.items()
        }
    return NgramModel(vocab, order, float(data["alpha"]), int(data["max_length"]), counts)


def save_ngram(model: NgramModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ngram_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_ngram(path: str) -> NgramModel:
    with open(path, "r", encoding="utf-8") as fh:
        return ngram_from_dict(json.load(fh))


def read_corpus(path: str) -> list[str]:
    """UTF-8 text, one sequence per line; empty lines are empty sequences."""
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


ModelFactory = Callable[[str], LanguageModel]
