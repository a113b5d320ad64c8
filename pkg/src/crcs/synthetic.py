"""Synthetic benchmarks with known causes, and scoring of mined rules against them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .association import ContingencyTable, or_confidence_interval
from .dataset import Dataset
from .errors import GenerationError

RESPONSE_NAME = "Z"


@dataclass
class GroundTruth:
    item_names: list
    single_causes: set = field(default_factory=set)
    combined_causes: set = field(default_factory=set)
    generator_spec: dict = field(default_factory=dict)

    def single_names(self) -> set:
        return {self.item_names[i] for i in self.single_causes}

    def combined_names(self) -> set:
        return {frozenset(self.item_names[i] for i in pair) for pair in self.combined_causes}

    def to_json(self) -> str:
        return json.dumps(
            {
                "single_causes": sorted(self.single_names()),
                "combined_causes": sorted(sorted(p) for p in self.combined_names()),
                "single_cause_ids": sorted(self.single_causes),
                "combined_cause_ids": sorted(sorted(p) for p in self.combined_causes),
                "items": list(self.item_names),
                "generator": self.generator_spec,
            },
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        obj = json.loads(text)
        names = obj["items"]
        pos = {nm: i for i, nm in enumerate(names)}
        return cls(
            item_names=names,
            single_causes={pos[nm] for nm in obj["single_causes"]},
            combined_causes={tuple(sorted(pos[nm] for nm in pair)) for pair in obj["combined_causes"]},
            generator_spec=obj.get("generator", {}),
        )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _names(n_pred: int) -> list:
    return [f"X{i + 1}" for i in range(n_pred)] + [RESPONSE_NAME]


def _response_rate_ok(z: np.ndarray) -> bool:
    return 0.05 <= z.mean() <= 0.95


def generate_bn(m: int, n: int, cause_count: int, seed: int, max_parents: int = 3,
                coefficient_range=(1.0, 2.0), max_attempts: int = 50):
    """Random binary Bayesian network with the response ``Z`` as a sink node.

    Predictor ``i`` draws 0..``max_parents`` parents among lower-indexed
    predictors with CPT entries uniform in [0.1, 0.9]. ``Z`` has exactly
    ``cause_count`` parents; its CPT is a logistic function of the parents with
    coefficient magnitudes drawn from ``coefficient_range`` and random signs,
    the intercept centring the response rate. ``m`` counts the response.
    """
    if m < 2:
        raise ValueError("need at least one predictor and the response")
    if not 0 <= cause_count < m:
        raise ValueError("cause_count must be in [0, m)")
    n_pred = m - 1
    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        parents, cpts = [], []
        x = np.zeros((n, n_pred), dtype=bool)
        for i in range(n_pred):
            k = int(rng.integers(0, min(max_parents, i) + 1))
            pa = sorted(int(v) for v in rng.choice(i, size=k, replace=False)) if k else []
            cpt = rng.uniform(0.1, 0.9, size=2 ** k)
            idx = np.zeros(n, dtype=np.int64)
            for bit, p in enumerate(pa):
                idx |= x[:, p].astype(np.int64) << bit
            x[:, i] = rng.random(n) < cpt[idx]
            parents.append(pa)
            cpts.append(cpt.round(12).tolist())
        causes = sorted(int(v) for v in rng.choice(n_pred, size=cause_count, replace=False))
        if causes:
            lo, hi = coefficient_range
            coef = rng.uniform(lo, hi, size=cause_count) * rng.choice([-1.0, 1.0], size=cause_count)
            eta = x[:, causes].astype(float) @ coef
            b0 = -float(eta.mean())
            z = rng.random(n) < _sigmoid(b0 + eta)
        else:
            coef = np.zeros(0)
            b0 = float(rng.uniform(-0.85, 0.85))
            z = rng.random(n) < _sigmoid(b0)
        if _response_rate_ok(z):
            break
    else:
        raise GenerationError("could not reach a response rate within [0.05, 0.95]")
    names = _names(n_pred)
    d = Dataset.from_matrix(np.column_stack([x, z]), names, RESPONSE_NAME)
    g = GroundTruth(
        item_names=names,
        single_causes=set(causes),
        generator_spec={
            "model": "bn", "m": m, "n": n, "cause_count": cause_count, "seed": seed,
            "attempt": attempt, "parents": parents, "cpts": cpts,
            "response_parents": causes, "response_coefficients": coef.round(12).tolist(),
            "response_intercept": round(b0, 12),
        },
    )
    return d, g


def generate_logistic(m: int, n: int, cause_count: int, seed: int,
                      coefficient_range=(0.5, 1.5), max_attempts: int = 50):
    """Independent Bernoulli predictors and a logistic response on the planted causes."""
    if m < 2:
        raise ValueError("need at least one predictor and the response")
    if not 0 <= cause_count < m:
        raise ValueError("cause_count must be in [0, m)")
    n_pred = m - 1
    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        probs = rng.uniform(0.2, 0.8, size=n_pred)
        x = rng.random((n, n_pred)) < probs
        causes = sorted(int(v) for v in rng.choice(n_pred, size=cause_count, replace=False))
        lo, hi = coefficient_range
        coef = np.zeros(n_pred)
        coef[causes] = rng.uniform(lo, hi, size=cause_count) * rng.choice([-1.0, 1.0], size=cause_count)
        b0 = -float(coef @ probs)
        z = rng.random(n) < _sigmoid(b0 + x.astype(float) @ coef)
        if _response_rate_ok(z):
            break
    else:
        raise GenerationError("could not reach a response rate within [0.05, 0.95]")
    names = _names(n_pred)
    d = Dataset.from_matrix(np.column_stack([x, z]), names, RESPONSE_NAME)
    g = GroundTruth(
        item_names=names,
        single_causes=set(causes),
        generator_spec={
            "model": "logistic", "m": m, "n": n, "cause_count": cause_count, "seed": seed,
            "attempt": attempt, "marginals": probs.round(12).tolist(),
            "coefficients": coef.round(12).tolist(), "intercept": round(b0, 12),
        },
    )
    return d, g


def _associated(x: np.ndarray, z: np.ndarray, confidence: float) -> bool:
    a = int(np.sum(x & z))
    b = int(np.sum(x & ~z))
    c = int(np.sum(~x & z))
    d = int(np.sum(~x & ~z))
    lo, hi = or_confidence_interval(ContingencyTable(a, b, c, d), confidence)
    return not lo <= 1.0 <= hi


def plant_combined(d: Dataset, g: GroundTruth, cause_item: int, seed: int,
                   confidence: float = 0.95, max_attempts: int = 100):
    """Split cause ``X`` into ``Xa``, ``Xb`` with ``X = Xa & Xb``.

    Rows with ``X = 1`` get ``Xa = Xb = 1``. Disjoint subsets of the ``X = 0``
    rows receive ``Xa = 1`` or ``Xb = 1``, drawn so each component's response
    rate equals the overall rate; the split is redrawn until neither component
    shows a significant marginal association with the response.
    """
    if cause_item not in g.single_causes:
        raise ValueError(f"item {cause_item} is not a planted single cause")
    rng = np.random.default_rng(seed)
    z = d.matrix[:, d.response]
    xcol = d.matrix[:, cause_item]
    n1 = int(xcol.sum())
    z1 = int((xcol & z).sum())
    rate = float(z.mean())
    zero_z = np.flatnonzero(~xcol & z)
    zero_n = np.flatnonzero(~xcol & ~z)
    # smallest subset of X=0 rows that can pull a component's response rate back to the overall rate
    excess = z1 - rate * n1
    base = excess / rate if excess > 0 else -excess / max(1.0 - rate, 1e-9)
    base = max(base, 0.05 * n1, 1.0)
    factors = [2.0, 1.5, 3.0, 1.25, 4.0, 1.1]
    for attempt in range(max_attempts):
        size = int(round(base * factors[attempt % len(factors)]))
        want_z = int(round(rate * (n1 + size))) - z1
        want_n = size - want_z
        if want_z < 0 or want_n < 0 or 2 * want_z > len(zero_z) or 2 * want_n > len(zero_n):
            continue
        pick_z = rng.permutation(zero_z)[: 2 * want_z]
        pick_n = rng.permutation(zero_n)[: 2 * want_n]
        xa, xb = xcol.copy(), xcol.copy()
        xa[pick_z[:want_z]] = True
        xa[pick_n[:want_n]] = True
        xb[pick_z[want_z:]] = True
        xb[pick_n[want_n:]] = True
        if _associated(xa, z, confidence) or _associated(xb, z, confidence):
            continue
        break
    else:
        raise GenerationError(f"could not split item {cause_item} into non-associated parts")

    old = d.items[cause_item].name
    names = [it.name for it in d.items]
    new_names = names[:cause_item] + [f"{old}a", f"{old}b"] + names[cause_item + 1:]
    mat = d.matrix
    new_mat = np.column_stack([mat[:, :cause_item], xa, xb, mat[:, cause_item + 1:]])
    nd = Dataset.from_matrix(new_mat, new_names, d.items[d.response].name)

    def remap(i):
        return i if i < cause_item else i + 1

    spec = dict(g.generator_spec)
    spec["splits"] = list(spec.get("splits", [])) + [
        {"item": old, "seed": seed, "attempt": attempt, "confidence": confidence}
    ]
    ng = GroundTruth(
        item_names=new_names,
        single_causes={remap(i) for i in g.single_causes if i != cause_item},
        combined_causes={tuple(remap(i) for i in pair) for pair in g.combined_causes}
        | {(cause_item, cause_item + 1)},
        generator_spec=spec,
    )
    return nd, ng


def generate_combined(m: int, n: int, cause_count: int, combined: int, seed: int,
                      max_attempts: int = 20, split_confidence: float = 0.99, model: str = "bn",
                      **kwargs):
    """Dataset with ``combined`` of its causes split into two-item combined causes.

    ``m`` counts columns before splitting, so the result has ``m + combined``.
    Only causes with a significant marginal association (at
    ``split_confidence``) are split, since an unassociated cause is never a
    candidate rule. A cause that is too common or too strong may not split into
    two non-associated parts; when fewer than ``combined`` causes can be split
    the network is redrawn from a derived seed.
    """
    if combined > cause_count:
        raise ValueError("cannot plant more combined causes than causes")
    for attempt in range(max_attempts):
        bn_seed = seed if attempt == 0 else int(
            np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        d, g = GENERATORS[model](m, n, cause_count, bn_seed, **kwargs)
        rng = np.random.default_rng([seed, attempt, 1])
        z = d.matrix[:, d.response]
        order = [d.items[int(i)].name for i in rng.permutation(sorted(g.single_causes))
                 if _associated(d.matrix[:, int(i)], z, split_confidence)]
        planted = 0
        for name in order:
            if planted == combined:
                break
            try:
                d, g = plant_combined(d, g, d.item_id(name), seed=int(rng.integers(2**31)))
            except GenerationError:
                continue
            planted += 1
        if planted == combined:
            g.generator_spec["combined_attempt"] = attempt
            return d, g
    raise GenerationError(f"could not plant {combined} combined causes in {max_attempts} networks")


GENERATORS = {"bn": generate_bn, "logistic": generate_logistic}


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    combined_hits: int
    combined_extras: int
    found: frozenset = frozenset()


def _prf(found: set, truth: set):
    hit = len(found & truth)
    p = hit / len(found) if found else 0.0
    r = hit / len(truth) if truth else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def score(rules, g: GroundTruth) -> Score:
    """Precision/recall/F1 of single-item rules against the planted single causes.

    ``rules`` is a :class:`MiningReport` or an iterable of rule records with an
    ``lhs`` list of item names. Level-2 rules matching a planted pair count as
    combined hits; other level-2 rules are reported as extras.
    """
    from .engine import MiningReport

    if isinstance(rules, MiningReport):
        lhs_sets = [frozenset(g.item_names[i] for i in cr.rule.lhs) for cr in rules.causal_rules]
    else:
        lhs_sets = [frozenset(r["lhs"]) for r in rules if r.get("causal", True)]
    single = {next(iter(s)) for s in lhs_sets if len(s) == 1}
    pairs = {s for s in lhs_sets if len(s) == 2}
    planted = g.combined_names()
    p, r, f = _prf(single, g.single_names())
    return Score(p, r, f, len(pairs & planted), len(pairs - planted), frozenset(single))
