"""Typical sets and local typicality for exactly enumerable models.

The typical set here is a band on total information: sequences whose
information content lies within ``epsilon`` nats of the model entropy.
For fixed-length i.i.d. models this coincides with the classical
per-symbol formulation with ``epsilon_total = length * epsilon_per_symbol``
(everything is kept in nats; base-2 statements convert at the boundary).

Local typicality checks every length-``n`` window of a sequence against a
band around that window position's joint entropy.  Window marginals are
exact sums over the enumerated support.  Because our sequences have
bounded, variable length, the window variable at a position includes an
explicit "sequence ended before the window" outcome: marginal masses are
raw (unnormalized by the probability that the window exists), which keeps
the ratio of consecutive window marginals equal to the model conditional,
the identity the inclusion check below relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SequenceError
from .information import exact_entropy, information_content
from .lm import LanguageModel, NgramModel, Sequence, enumerate_support

_BAND_TOL = 1e-9


@dataclass(frozen=True)
class TypicalSetReport:
    """Membership census of the information band [H - eps, H + eps]."""

    epsilon: float
    entropy: float
    lower: float
    upper: float
    member_count: int
    member_mass: float
    support_size: int
    members: tuple[Sequence, ...] | None = None


@dataclass(frozen=True)
class WindowBandCheck:
    """One window's marginal mass against its position's joint entropy."""

    start: int            # 1-based interior position of the window
    order: int
    marginal_prob: float
    window_entropy: float # joint entropy at this position, nats
    in_band: bool


@dataclass(frozen=True)
class LocalTypicalityResult:
    windows: tuple[WindowBandCheck, ...]
    locally_typical: bool


@dataclass(frozen=True)
class InclusionReport:
    """Outcome of the local-to-global inclusion check on an n-gram model.

    ``passed`` means every sequence that is locally typical at both window
    orders satisfied the accumulated surprisal bound
    ``(length - order) * (2 * order + 1) * epsilon`` on the windowed part
    of its information content.  ``empirical_global_tolerance`` is the
    smallest global band half-width that contains every such sequence,
    reported because the bound's constants are otherwise unconstrained.
    """

    passed: bool
    epsilon: float
    window_order_high: int
    window_order_low: int
    model_entropy: float
    checked_count: int
    locally_typical_count: int
    empirical_global_tolerance: float | None
    counterexample: Sequence | None


class SupportTable:
    """Enumerated support in array form for vectorized window queries."""

    def __init__(self, model: LanguageModel, cap: int):
        self.model = model
        vocab = model.vocabulary
        width = model.max_length
        ids = np.full((1024, max(width, 1)), -1, dtype=np.int16)
        probs = np.zeros(1024)
        infos = np.zeros(1024)
        n = 0
        for seq, lp in enumerate_support(model, cap):
            if n == ids.shape[0]:
                ids = np.concatenate([ids, np.full_like(ids, -1)])
                probs = np.concatenate([probs, np.zeros_like(probs)])
                infos = np.concatenate([infos, np.zeros_like(infos)])
            interior = seq.interior
            if interior:
                ids[n, :len(interior)] = interior
            probs[n] = math.exp(lp)
            infos[n] = -lp
            n += 1
        self.ids = ids[:n]
        self.probs = probs[:n]
        self.infos = infos[:n]
        self.lengths = (self.ids >= 0).sum(axis=1)
        self.size = n
        self._base = vocab.size + 2
        self._windows: dict[tuple[int, int], tuple[dict[int, float], float]] = {}
        self._entropies: dict[tuple[int, int], float] = {}

    def sequence_at(self, row: int) -> Sequence:
        vocab = self.model.vocabulary
        interior = tuple(int(t) for t in self.ids[row] if t >= 0)
        return Sequence((vocab.bos_id, *interior, vocab.eos_id))

    def _codes(self, start: int, order: int, rows: np.ndarray) -> np.ndarray:
        """Integer encoding of the window at interior positions
        start..start+order-1 (1-based) for the given rows."""
        block = self.ids[rows, start - 1:start - 1 + order].astype(np.int64) + 1
        weights = self._base ** np.arange(order, dtype=np.int64)
        return block @ weights

    def window_distribution(self, start: int, order: int) -> tuple[dict[int, float], float]:
        """Raw window masses keyed by integer code, plus the mass of
        sequences too short to have this window."""
        key = (start, order)
        cached = self._windows.get(key)
        if cached is not None:
            return cached
        long_enough = np.flatnonzero(self.lengths >= start + order - 1)
        masses: dict[int, float] = {}
        if long_enough.size:
            codes = self._codes(start, order, long_enough)
            uniq, inverse = np.unique(codes, return_inverse=True)
            sums = np.zeros(uniq.size)
            np.add.at(sums, inverse, self.probs[long_enough])
            masses = {int(c): float(s) for c, s in zip(uniq, sums)}
        undefined = float(self.probs.sum() - sum(masses.values()))
        result = (masses, max(undefined, 0.0))
        self._windows[key] = result
        return result

    def window_entropy(self, start: int, order: int) -> float:
        key = (start, order)
        cached = self._entropies.get(key)
        if cached is None:
            masses, undefined = self.window_distribution(start, order)
            cached = -sum(p * math.log(p) for p in masses.values() if p > 0)
            if undefined > 0:
                cached -= undefined * math.log(undefined)
            self._entropies[key] = cached
        return cached

    def window_mass(self, start: int, order: int, window: tuple[int, ...]) -> float:
        masses, _ = self.window_distribution(start, order)
        code = 0
        for j, tok in enumerate(window):
            code += (int(tok) + 1) * self._base ** j
        return masses.get(code, 0.0)

    def in_band_flags(self, start: int, order: int, epsilon: float) -> np.ndarray:
        """Boolean per supported sequence: window at ``start`` exists and
        lies within ``order * epsilon`` of the window entropy."""
        masses, _ = self.window_distribution(start, order)
        h = self.window_entropy(start, order)
        flags = np.zeros(self.size, dtype=bool)
        rows = np.flatnonzero(self.lengths >= start + order - 1)
        if rows.size:
            codes = self._codes(start, order, rows)
            uniq, inverse = np.unique(codes, return_inverse=True)
            ok = np.array([
                abs(-math.log(masses[int(c)]) - h) <= order * epsilon + _BAND_TOL
                for c in uniq
            ])
            flags[rows] = ok[inverse]
        return flags


def typical_set(model: LanguageModel, epsilon: float, cap: int,
                include_members: bool = False) -> TypicalSetReport:
    """Census of sequences whose information lies in [H - eps, H + eps]."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    h, _ = exact_entropy(model, cap)
    lower, upper = h - epsilon, h + epsilon
    count = 0
    mass = 0.0
    total = 0
    members: list[Sequence] = []
    for seq, lp in enumerate_support(model, cap):
        total += 1
        if abs(-lp - h) <= epsilon + _BAND_TOL:
            count += 1
            mass += math.exp(lp)
            if include_members:
                members.append(seq)
    return TypicalSetReport(epsilon, h, lower, upper, count, mass, total,
                            tuple(members) if include_members else None)


def typical_mass_growth(model_family, eps_per_symbol: float,
                        lengths, cap: int = 5_000_000) -> dict[int, float]:
    """Typical-set mass per length for a family of fixed-length models.

    ``model_family`` maps a length to a model; the band half-width scales
    as ``length * eps_per_symbol``, the classical per-symbol band.
    """
    out: dict[int, float] = {}
    for length in lengths:
        model = model_family(length)
        out[int(length)] = typical_set(model, eps_per_symbol * length, cap).member_mass
    return out


def locally_typical_check(model: LanguageModel, y: Sequence, order: int,
                          epsilon: float, cap: int,
                          table: SupportTable | None = None) -> LocalTypicalityResult:
    """Check every length-``order`` window of ``y`` against its band.

    A window at interior position ``i`` is in band when its raw marginal
    mass ``p`` satisfies ``|-log p - H_i| <= order * epsilon`` for the
    joint window entropy ``H_i`` at that position.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    length = y.interior_length
    if not 1 <= order <= length:
        raise SequenceError(
            f"window order {order} must lie in 1..interior length {length}"
        )
    if table is None:
        table = SupportTable(model, cap)
    interior = y.interior
    windows = []
    for start in range(1, length - order + 2):
        w = interior[start - 1:start - 1 + order]
        p = table.window_mass(start, order, w)
        h = table.window_entropy(start, order)
        in_band = p > 0 and abs(-math.log(p) - h) <= order * epsilon + _BAND_TOL
        windows.append(WindowBandCheck(start, order, p, h, in_band))
    return LocalTypicalityResult(tuple(windows), all(w.in_band for w in windows))


def locally_typical_set(model: LanguageModel, order: int, epsilon: float,
                        cap: int, table: SupportTable | None = None) -> list[Sequence]:
    """All supported sequences whose every length-``order`` window is in
    band.  Sequences shorter than ``order`` have no such window and are
    excluded."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if table is None:
        table = SupportTable(model, cap)
    ok = table.lengths >= order
    max_start = int(table.lengths.max(initial=0)) - order + 1
    for start in range(1, max_start + 1):
        relevant = table.lengths >= start + order - 1
        flags = table.in_band_flags(start, order, epsilon)
        ok &= flags | ~relevant
    return [table.sequence_at(int(r)) for r in np.flatnonzero(ok)]


def verify_local_global_inclusion(model: NgramModel, max_length: int,
                                  epsilon: float, cap: int) -> InclusionReport:
    """Exhaustively test the inclusion of the doubly-locally-typical set in
    a global information band on an n-gram model.

    For a model conditioning on ``m`` previous tokens, windows of orders
    ``m + 1`` and ``m`` are checked.  For every supported sequence (interior
    length between ``m + 1`` and ``max_length``) that is locally typical at
    both orders, the sum of its model conditional surprisals over positions
    covered by full windows must deviate from the corresponding sum of
    window entropy differences by at most
    ``(length - m) * (2 * m + 1) * epsilon``; the first violator, if any,
    is returned as a counterexample.  The smallest global band containing
    all such sequences is reported as the empirical tolerance.
    """
    if not isinstance(model, NgramModel):
        raise TypeError("inclusion check requires an n-gram model")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    m = model.order
    n_hi, n_lo = m + 1, m
    table = SupportTable(model, cap)
    h_model, _ = exact_entropy(model, cap)

    eligible = (table.lengths >= n_hi) & (table.lengths <= max_length)
    ok = eligible.copy()
    max_len_seen = int(table.lengths.max(initial=0))
    for start in range(1, max_len_seen - n_lo + 2):
        for order in (n_lo, n_hi):
            if start + order - 1 > max_len_seen:
                continue
            relevant = table.lengths >= start + order - 1
            ok &= table.in_band_flags(start, order, epsilon) | ~relevant

    # Cumulative window-entropy differences: delta[i] corresponds to the
    # window pair starting at interior position i + 1.
    deltas = []
    for start in range(1, max_len_seen - m + 1):
        deltas.append(table.window_entropy(start, n_hi) - table.window_entropy(start, n_lo))
    cum_delta = np.concatenate([[0.0], np.cumsum(deltas)]) if deltas else np.zeros(1)

    rows = np.flatnonzero(ok)
    counterexample = None
    tolerance = None
    for row in rows:
        seq = table.sequence_at(int(row))
        length = seq.interior_length
        profile = information_content(model, seq)
        covered = sum(profile.surprisals[m:length])  # positions m+1..length, 0-based slice
        expected = float(cum_delta[length - m])
        bound = (length - m) * (2 * m + 1) * epsilon + 1e-6
        if abs(covered - expected) > bound:
            counterexample = seq
            break
        deviation = abs(profile.total - h_model)
        tolerance = deviation if tolerance is None else max(tolerance, deviation)
    return InclusionReport(
        passed=counterexample is None,
        epsilon=epsilon,
        window_order_high=n_hi,
        window_order_low=n_lo,
        model_entropy=h_model,
        checked_count=int(eligible.sum()),
        locally_typical_count=int(rows.size),
        empirical_global_tolerance=tolerance,
        counterexample=counterexample,
    )
