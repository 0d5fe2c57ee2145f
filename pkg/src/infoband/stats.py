"""Entropy-band membership and the Welch t-test machinery.

The band question: does a string's information content fall inside
[H_hat - sigma, H_hat + sigma] for a model's entropy estimate?  Tests
compare in-band proportions of rated strings against model samples
(paired, per context) and compare scores of in-band strings against
out-of-band ones (unpaired).  The t CDF is computed from the regularized
incomplete beta function, not from tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.special import betainc

from .errors import DegenerateSamplesError
from .information import EntropyEstimate, InformationProfile

_BOUNDARY_TOL = 1e-9


def t_cdf(t: float, dof: float) -> float:
    """Student t cumulative distribution via the regularized incomplete
    beta function: P(T >= |t|) = I_x(dof/2, 1/2) / 2 with x = dof/(dof+t^2)."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0 if t < 0 else 1.0
    x = dof / (dof + t * t)
    tail = 0.5 * float(betainc(dof / 2.0, 0.5, x))
    return tail if t < 0 else 1.0 - tail


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p_value: float
    paired: bool
    one_sided: bool

    def to_dict(self) -> dict:
        return {
            "t": float(self.t),
            "dof": float(self.dof),
            "p_value": float(self.p_value),
            "paired": self.paired,
            "one_sided": self.one_sided,
        }


def welch_t_test(a: Iterable[float], b: Iterable[float], paired: bool = False,
                 one_sided: bool = False) -> WelchResult:
    """Two-sample t-test; unpaired mode uses Welch's statistic with
    Satterthwaite degrees of freedom, paired mode tests the mean
    difference against zero.

    ``one_sided`` tests the alternative that the first sample's mean is
    greater.  Raises :class:`DegenerateSamplesError` when no variance is
    available (both samples constant, or constant differences when paired).
    """
    x = np.asarray(list(a), dtype=float)
    y = np.asarray(list(b), dtype=float)
    if x.size < 2 or y.size < 2:
        raise ValueError("each sample needs at least two values")
    if paired:
        if x.size != y.size:
            raise ValueError("paired test requires equal-length samples")
        d = x - y
        var = float(d.var(ddof=1))
        if var == 0.0:
            raise DegenerateSamplesError("paired differences have zero variance")
        t = float(d.mean()) / math.sqrt(var / d.size)
        dof = float(d.size - 1)
    else:
        vx, vy = float(x.var(ddof=1)), float(y.var(ddof=1))
        if vx == 0.0 and vy == 0.0:
            raise DegenerateSamplesError("both samples have zero variance")
        sx, sy = vx / x.size, vy / y.size
        t = (float(x.mean()) - float(y.mean())) / math.sqrt(sx + sy)
        dof = (sx + sy) ** 2 / (sx ** 2 / (x.size - 1) + sy ** 2 / (y.size - 1))
    if one_sided:
        p = 1.0 - t_cdf(t, dof)
    else:
        p = 2.0 * (1.0 - t_cdf(abs(t), dof))
    return WelchResult(t, dof, p, paired, one_sided)


def _info_value(item, normalized: bool) -> float:
    if isinstance(item, InformationProfile):
        return item.normalized if normalized else item.total
    return float(item)


def band_membership(profile, estimate: EntropyEstimate,
                    normalized: bool = False) -> str:
    """"inside", "above" (less probable) or "below" the one-sigma band.

    The boundary is inclusive with absolute tolerance 1e-9.  ``profile``
    may be an :class:`InformationProfile` or a raw information value.
    """
    value = _info_value(profile, normalized)
    if value >= estimate.mean + estimate.std + _BOUNDARY_TOL:
        return "above"
    if value <= estimate.mean - estimate.std - _BOUNDARY_TOL:
        return "below"
    return "inside"


@dataclass(frozen=True)
class BandTestResult:
    """Per-context in-band proportions and the paired one-sided test that
    rated strings beat the model-sample chance rate."""

    contexts: tuple[str, ...]
    observed: tuple[float, ...]
    chance: tuple[float, ...]
    t: float
    dof: float
    p_value: float
    alpha: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "contexts": list(self.contexts),
            "observed": [float(v) for v in self.observed],
            "chance": [float(v) for v in self.chance],
            "t": float(self.t),
            "dof": float(self.dof),
            "p_value": float(self.p_value),
            "alpha": float(self.alpha),
            "reject": self.reject,
        }


def _in_band_proportion(items, estimate: EntropyEstimate, normalized: bool) -> float:
    flags = [band_membership(it, estimate, normalized) == "inside" for it in items]
    return sum(flags) / len(flags)


def band_vs_chance_test(rated: Mapping[str, Iterable],
                        samples: Mapping[str, Iterable],
                        estimates: Mapping[str, EntropyEstimate],
                        alpha: float = 0.01,
                        normalized: bool = False) -> BandTestResult:
    """Paired one-sided test that rated strings land in the entropy band
    more often than strings sampled from the model.

    ``rated`` and ``samples`` map each context to information profiles (or
    raw information values); each context needs at least one rated string,
    two samples and an estimate, and at least two contexts are required.
    """
    contexts = list(rated)
    if len(contexts) < 2:
        raise ValueError("need at least two contexts")
    observed = []
    chance = []
    for ctx in contexts:
        rated_items = list(rated[ctx])
        sample_items = list(samples[ctx])
        if not rated_items:
            raise ValueError(f"context {ctx!r} has no rated strings")
        if len(sample_items) < 2:
            raise ValueError(f"context {ctx!r} has fewer than two samples")
        est = estimates[ctx]
        observed.append(_in_band_proportion(rated_items, est, normalized))
        chance.append(_in_band_proportion(sample_items, est, normalized))
    res = welch_t_test(observed, chance, paired=True, one_sided=True)
    return BandTestResult(tuple(contexts), tuple(observed), tuple(chance),
                          res.t, res.dof, res.p_value, alpha, res.p_value < alpha)


@dataclass(frozen=True)
class ScoreBandSplit:
    """Scores partitioned by band membership, with the unpaired one-sided
    test that in-band scores are higher (omitted when a cell is too small
    or degenerate; ``test_note`` carries the reason)."""

    inside: tuple[float, ...]
    outside: tuple[float, ...]
    above: tuple[float, ...]
    below: tuple[float, ...]
    test: WelchResult | None
    test_note: str | None

    def to_dict(self) -> dict:
        return {
            "inside": [float(v) for v in self.inside],
            "outside": [float(v) for v in self.outside],
            "above": [float(v) for v in self.above],
            "below": [float(v) for v in self.below],
            "test": self.test.to_dict() if self.test else None,
            "test_note": self.test_note,
        }


def score_band_split(scored: Iterable[tuple[str, object, float]],
                     estimates: Mapping[str, EntropyEstimate],
                     normalized: bool = False) -> ScoreBandSplit:
    """Partition ``(context, profile, score)`` items by band membership.

    Every item's band comes from its own context's estimate.  The returned
    split is exhaustive and disjoint (outside = above + below).
    """
    cells: dict[str, list[float]] = {"inside": [], "above": [], "below": []}
    for ctx, profile, score in scored:
        cells[band_membership(profile, estimates[ctx], normalized)].append(float(score))
    inside = cells["inside"]
    outside = cells["above"] + cells["below"]
    test = None
    note = None
    if len(inside) < 2 or len(outside) < 2:
        note = "a partition cell has fewer than two scores; test omitted"
    else:
        try:
            test = welch_t_test(inside, outside, paired=False, one_sided=True)
        except DegenerateSamplesError as exc:
            note = str(exc)
    return ScoreBandSplit(tuple(inside), tuple(outside),
                          tuple(cells["above"]), tuple(cells["below"]), test, note)
