"""Retrospective cohort testing of association rules.

For a rule ``p -> z`` the exposure is ``P = 1`` (all items of ``p`` present).
Exposed and non-exposed records are paired on their control-item values
without looking at the response, and the discordant pairs of the resulting
fair dataset decide whether the rule is causal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .association import AssociationRule, ContingencyTable, critical_value, or_confidence_interval
from .dataset import Dataset, Pattern


@dataclass(frozen=True)
class Matcher:
    kind: str = "exact"
    theta: float = 0.9

    def __post_init__(self):
        if self.kind not in ("exact", "jaccard"):
            raise ValueError(f"unknown matcher {self.kind!r}")
        if not 0 <= self.theta <= 1:
            raise ValueError("jaccard theta must be in [0, 1]")

    def __str__(self):
        return "exact" if self.kind == "exact" else f"jaccard({self.theta:g})"


EXACT = Matcher("exact")


@dataclass(frozen=True)
class CausalMode:
    """``ci`` tests the matched-pair CI lower bound; ``threshold`` compares to ``alpha``."""

    kind: str = "ci"
    confidence: float = 0.95
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ci", "threshold"):
            raise ValueError(f"unknown causal mode {self.kind!r}")


@dataclass(frozen=True)
class ControlSet:
    exposure: Pattern
    controls: tuple
    excluded_irrelevant: frozenset = frozenset()
    excluded_exclusive: frozenset = frozenset()
    excluded_infrequent: frozenset = frozenset()


@dataclass(frozen=True)
class MatchedPairTable:
    """Pair outcome counts: n11 both have the target, n12 only the exposed one,
    n21 only the non-exposed one, n22 neither."""

    n11: int = 0
    n12: int = 0
    n21: int = 0
    n22: int = 0

    @property
    def n_pairs(self) -> int:
        return self.n11 + self.n12 + self.n21 + self.n22


@dataclass(frozen=True)
class FairDataset:
    pairs: tuple
    table: MatchedPairTable
    rng_seed: int

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CausalRule:
    rule: AssociationRule
    fair_or: float
    fair_ci_low: float
    fair_ci_high: float
    n_pairs: int
    causal: bool
    untestable: bool = False
    fair: FairDataset | None = field(default=None, compare=False, repr=False)
    controls: ControlSet | None = field(default=None, compare=False, repr=False)

    @property
    def rule_id(self):
        return self.rule.rule_id


def rule_seed(seed: int, lhs: Pattern, target: str) -> int:
    """Per-rule RNG seed, independent of the order rules are tested in."""
    words = [int(seed) & 0xFFFFFFFF, int(seed) >> 32 & 0xFFFFFFFF,
             0 if target == "z" else 1, len(lhs), *lhs]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0])


def find_irrelevant(d: Dataset, confidence: float = 0.95, items=None) -> frozenset:
    """Items whose single-item odds ratio with the response is not significant either way."""
    items = d.predictors if items is None else items
    out = set()
    for j in items:
        a = (d.columns[j] & d.z_bits).bit_count()
        supp = d.columns[j].bit_count()
        t = ContingencyTable(a, supp - a, d.n_z - a, d.n_notz - (supp - a))
        if t.degenerate:
            out.add(j)
            continue
        lo, hi = or_confidence_interval(t, confidence)
        if lo <= 1.0 <= hi:
            out.add(j)
    return frozenset(out)


def find_exclusive(d: Dataset, exposure: Pattern, epsilon: int, items=None) -> frozenset:
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    p_bits = d.cover_bits(exposure)
    not_p = d.all_bits & ~p_bits
    items = d.predictors if items is None else items
    out = set()
    for q in items:
        if q in exposure:
            continue
        col = d.columns[q]
        if (p_bits & col).bit_count() <= epsilon or (not_p & col).bit_count() <= epsilon:
            out.add(q)
    return frozenset(out)


def build_control_set(d: Dataset, exposure: Pattern, irrelevant=frozenset(), epsilon: int = 0,
                      candidates=None) -> ControlSet:
    """Controls are the candidate predictors minus exposure, irrelevant and exclusive items.

    ``candidates`` defaults to every predictor; items outside it are reported
    as infrequent.
    """
    candidates = frozenset(d.predictors if candidates is None else candidates)
    exposure_set = set(exposure)
    exclusive = find_exclusive(d, exposure, epsilon)
    infrequent = frozenset(j for j in d.predictors if j not in candidates and j not in exposure_set)
    controls = tuple(sorted(
        j for j in candidates
        if j not in exposure_set and j not in irrelevant and j not in exclusive
    ))
    return ControlSet(
        exposure=tuple(exposure),
        controls=controls,
        excluded_irrelevant=frozenset(j for j in irrelevant if j not in exposure_set),
        excluded_exclusive=exclusive,
        excluded_infrequent=infrequent,
    )


def control_keys(ctrl: np.ndarray) -> np.ndarray:
    """Integer id per record such that equal ids mean identical control values."""
    n, width = ctrl.shape
    if width == 0:
        return np.zeros(n, dtype=np.int64)
    if width <= 62:
        return ctrl.astype(np.int64) @ (np.int64(1) << np.arange(width, dtype=np.int64))
    packed = np.ascontiguousarray(np.packbits(ctrl, axis=1))
    rows = packed.view(np.dtype((np.void, packed.shape[1]))).ravel()
    return np.unique(rows, return_inverse=True)[1].ravel().astype(np.int64)


def _rank_in_group(keys: np.ndarray) -> np.ndarray:
    """Position of each element within its run of equal keys (keys already sorted)."""
    starts = np.r_[0, np.flatnonzero(keys[1:] != keys[:-1]) + 1]
    run_start = np.repeat(starts, np.diff(np.r_[starts, len(keys)]))
    return np.arange(len(keys)) - run_start


def _exact_pairs(ctrl: np.ndarray, small, large, priority):
    keys = control_keys(ctrl)
    ks, kl = keys[small], keys[large]
    s_order = np.lexsort((small, ks))
    l_order = np.lexsort((priority[large], kl))
    s_keys, l_keys = ks[s_order], kl[l_order]
    s_rank = _rank_in_group(s_keys)
    # the t-th small record of a bucket gets the bucket's t-th lowest-priority partner
    lo = np.searchsorted(l_keys, s_keys, side="left")
    hi = np.searchsorted(l_keys, s_keys, side="right")
    hit = lo + s_rank < hi
    mine = small[s_order[hit]]
    partner = large[l_order[(lo + s_rank)[hit]]]
    order = np.argsort(mine, kind="stable")
    return list(zip(mine[order].tolist(), partner[order].tolist()))


def _jaccard_pairs(ctrl: np.ndarray, small, large, priority, theta: float):
    """Greedy nearest-partner matching on Jaccard distance between control vectors.

    Distances are computed once between distinct control signatures; each
    signature on the larger side keeps its records in priority order, so the
    lowest-priority record among the tied nearest signatures is a queue head.
    """
    limit = 1.0 - theta + 1e-12
    s_sig, s_of = np.unique(control_keys(ctrl[small]), return_inverse=True)
    l_sig, l_of = np.unique(control_keys(ctrl[large]), return_inverse=True)
    s_rows = ctrl[small][np.unique(s_of.ravel(), return_index=True)[1]].astype(np.int32)
    l_rows = ctrl[large][np.unique(l_of.ravel(), return_index=True)[1]].astype(np.int32)
    inter = s_rows @ l_rows.T
    union = s_rows.sum(1)[:, None] + l_rows.sum(1)[None, :] - inter
    dist = np.where(union > 0, 1.0 - inter / np.maximum(union, 1), 0.0)

    order = np.lexsort((priority[large], l_of.ravel()))
    starts = np.searchsorted(l_of.ravel()[order], np.arange(len(l_sig)))
    ends = np.r_[starts[1:], len(order)]
    head = starts.copy()
    head_priority = priority[large[order[starts]]]
    out = []
    for r, sig in zip(small.tolist(), s_of.ravel().tolist()):
        live = head < ends
        if not live.any():
            break
        row = np.where(live, dist[sig], np.inf)
        best = row.min()
        if best > limit:
            continue
        ties = np.flatnonzero(row <= best + 1e-12)
        g = ties[np.argmin(head_priority[ties])]
        out.append((r, int(large[order[head[g]]])))
        head[g] += 1
        if head[g] < ends[g]:
            head_priority[g] = priority[large[order[head[g]]]]
    return out


def build_fair_dataset(d: Dataset, rule: AssociationRule, controls: ControlSet,
                       matcher: Matcher = EXACT, seed: int = 0) -> FairDataset:
    """Greedy matched-pair selection over the smaller of the two exposure groups.

    Records on the smaller side are visited in record order; each takes an
    unmatched partner among its best matches on the other side. Ties are broken
    by random per-record priorities drawn from ``seed``, so the partner is
    uniform over the remaining candidates. The response is only read after
    pairing, to tabulate outcomes.
    """
    exposed_mask = d.exposure_mask(rule.lhs)
    exposed = np.flatnonzero(exposed_mask)
    unexposed = np.flatnonzero(~exposed_mask)
    ctrl = d.matrix[:, list(controls.controls)]
    swap = len(exposed) > len(unexposed)
    small, large = (unexposed, exposed) if swap else (exposed, unexposed)
    priority = np.random.default_rng(seed).random(d.n_records)
    if len(small) == 0 or len(large) == 0:
        raw = []
    elif matcher.kind == "exact":
        raw = _exact_pairs(ctrl, small, large, priority)
    else:
        raw = _jaccard_pairs(ctrl, small, large, priority, matcher.theta)
    pairs = tuple((b, a) if swap else (a, b) for a, b in raw)
    return FairDataset(pairs, tabulate_pairs(d, pairs, rule.target), seed)


def tabulate_pairs(d: Dataset, pairs, target: str = "z") -> MatchedPairTable:
    if not pairs:
        return MatchedPairTable()
    z = d.matrix[:, d.response]
    if target == "not_z":
        z = ~z
    arr = np.asarray(pairs)
    ze, zn = z[arr[:, 0]], z[arr[:, 1]]
    return MatchedPairTable(
        n11=int(np.sum(ze & zn)),
        n12=int(np.sum(ze & ~zn)),
        n21=int(np.sum(~ze & zn)),
        n22=int(np.sum(~ze & ~zn)),
    )


def fair_odds_ratio(t: MatchedPairTable) -> float:
    return max(t.n12, 1) / max(t.n21, 1)


def matched_ci(t: MatchedPairTable, confidence: float = 0.95) -> tuple[float, float]:
    n12, n21 = max(t.n12, 1), max(t.n21, 1)
    log_or = math.log(n12 / n21)
    half = critical_value(confidence) * math.sqrt(1 / n12 + 1 / n21)
    return math.exp(log_or - half), math.exp(log_or + half)


def test_causal(d: Dataset, rule: AssociationRule, mode: CausalMode = CausalMode(),
                matcher: Matcher = EXACT, seed: int = 0, controls: ControlSet | None = None,
                irrelevant=None, epsilon: int = 0, candidates=None) -> CausalRule:
    """Build the fair dataset for ``rule`` and apply the causal criterion.

    ``seed`` seeds the matching RNG directly; callers mining many rules should
    pass :func:`rule_seed` values. If ``controls`` is omitted it is derived from
    ``irrelevant`` (computed when ``None``), ``epsilon`` and ``candidates``.
    """
    if controls is None:
        if irrelevant is None:
            irrelevant = find_irrelevant(d, mode.confidence)
        controls = build_control_set(d, rule.lhs, irrelevant, epsilon, candidates)
    fair = build_fair_dataset(d, rule, controls, matcher, seed)
    t = fair.table
    omega = fair_odds_ratio(t)
    lo, hi = matched_ci(t, mode.confidence)
    untestable = fair.n_pairs == 0
    if untestable:
        causal = False
    elif mode.kind == "ci":
        causal = lo > 1.0
    else:
        causal = omega > mode.alpha
    return CausalRule(rule, omega, lo, hi, fair.n_pairs, causal, untestable, fair, controls)


test_causal.__test__ = False  # keep pytest from collecting it when imported by name
