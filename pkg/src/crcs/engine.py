"""Level-wise causal rule mining (association search plus cohort testing)."""

from __future__ import annotations

import json
import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .association import PrefixTree, rules_at_level
from .cohort import EXACT, CausalMode, CausalRule, Matcher, build_control_set, find_irrelevant, rule_seed, test_causal
from .dataset import Dataset

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class MiningConfig:
    delta: float = 0.05
    max_len: int = 4
    confidence: float = 0.95
    min_oratio: float | None = None
    matcher: Matcher = EXACT
    runs: int = 3
    consensus_min: int = 2
    seed: int = 0
    epsilon: int | None = None
    prune: bool = True
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.runs < 1 or not 1 <= self.consensus_min <= self.runs:
            raise ValueError("need 1 <= consensus_min <= runs")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.min_oratio is not None and self.min_oratio <= 0:
            raise ValueError("min_oratio must be positive")

    @property
    def causal_mode(self) -> CausalMode:
        if self.min_oratio is None:
            return CausalMode("ci", self.confidence)
        return CausalMode("threshold", self.confidence, self.min_oratio)

    def epsilon_for(self, d: Dataset) -> int:
        return self.epsilon if self.epsilon is not None else math.floor(self.delta * d.n_records)

    def echo(self) -> dict:
        out = asdict(self)
        out["matcher"] = str(self.matcher)
        out.pop("threads")
        return out


@dataclass
class RunResult:
    seed: int
    causal: dict
    tested: list
    level_counts: dict
    timing: dict


@dataclass
class MiningReport:
    causal_rules: list
    per_run_rule_sets: list
    runs_containing: dict
    level_counts: list
    timing: dict
    config: MiningConfig
    tested_rules: list = field(default_factory=list)

    def rule_ids(self) -> set:
        return {cr.rule_id for cr in self.causal_rules}

    def rule_record(self, d: Dataset, cr: CausalRule) -> dict:
        r = cr.rule
        t = r.table
        return {
            "type": "rule",
            "lhs": d.names(r.lhs),
            "lhs_ids": list(r.lhs),
            "target": r.target,
            "length": len(r.lhs),
            "supp_pz": t.a,
            "supp_p_notz": t.b,
            "supp_notp_z": t.c,
            "supp_notp_notz": t.d,
            "odds_ratio": r.odds_ratio,
            "ci_low": r.ci_low,
            "ci_high": r.ci_high,
            "n_pairs": cr.n_pairs,
            "fair_or": cr.fair_or,
            "fair_ci_low": cr.fair_ci_low,
            "fair_ci_high": cr.fair_ci_high,
            "causal": cr.causal,
            "untestable": cr.untestable,
            "runs": self.runs_containing.get(cr.rule_id, []),
        }

    def to_jsonl(self, d: Dataset, include_tested: bool = False) -> str:
        header = {
            "type": "report",
            "schema_version": SCHEMA_VERSION,
            "response": d.items[d.response].name,
            "n_records": d.n_records,
            "n_items": d.n_items,
            "config": self.config.echo(),
            "level_counts": [{str(k): v for k, v in lc.items()} for lc in self.level_counts],
            "per_run_rule_counts": [len(s) for s in self.per_run_rule_sets],
            "n_causal_rules": len(self.causal_rules),
        }
        lines = [json.dumps(header, sort_keys=True)]
        lines += [json.dumps(self.rule_record(d, cr), sort_keys=True) for cr in self.causal_rules]
        if include_tested:
            ids = self.rule_ids()
            for cr in self.tested_rules:
                if cr.rule_id not in ids:
                    lines.append(json.dumps(self.rule_record(d, cr), sort_keys=True))
        return "\n".join(lines) + "\n"

    def table(self, d: Dataset) -> str:
        head = f"{'rule':<48} {'OR':>8} {'OR_low':>8} {'pairs':>6} {'fairOR':>8} {'fair_low':>8} runs"
        rows = [head, "-" * len(head)]
        resp = d.items[d.response].name
        for cr in self.causal_rules:
            rhs = resp if cr.rule.target == "z" else f"!{resp}"
            text = " & ".join(d.names(cr.rule.lhs)) + f" -> {rhs}"
            runs = ",".join(str(r) for r in self.runs_containing.get(cr.rule_id, []))
            rows.append(
                f"{text:<48} {cr.rule.odds_ratio:8.3f} {cr.rule.ci_low:8.3f} {cr.n_pairs:6d} "
                f"{cr.fair_or:8.3f} {cr.fair_ci_low:8.3f} {runs}"
            )
        return "\n".join(rows)


def run_seed(seed: int, run: int) -> int:
    """Seed of run ``run``: first 64-bit word of SeedSequence([seed_lo, seed_hi, run])."""
    words = [int(seed) & 0xFFFFFFFF, int(seed) >> 32 & 0xFFFFFFFF, int(run)]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0])


def consensus(rule_sets, min_count: int) -> set:
    if not rule_sets:
        raise ValueError("need at least one rule set")
    counts = Counter(rid for s in rule_sets for rid in set(s))
    return {rid for rid, c in counts.items() if c >= min_count}


_WORKER: dict = {}


def _init_worker(d, mode, matcher):
    _WORKER.update(d=d, mode=mode, matcher=matcher)


def _test_in_worker(args):
    rule, seed, controls = args
    w = _WORKER
    return test_causal(w["d"], rule, w["mode"], w["matcher"], seed, controls=controls)


def _run_once(d: Dataset, cfg: MiningConfig, seed: int, pool=None) -> RunResult:
    timing = Counter()
    t0 = time.perf_counter()
    tree = PrefixTree(d, cfg.max_len, cfg.delta, prune_equal=cfg.prune)
    tree.generate_level(1)
    frequent_items = frozenset(p[0] for p in tree.patterns(1))
    irrelevant = find_irrelevant(d, cfg.confidence)
    eps = cfg.epsilon_for(d)
    mode = cfg.causal_mode
    timing["search"] += time.perf_counter() - t0

    causal: dict = {}
    tested: list = []
    counts: dict = {}
    k = 1
    while k <= cfg.max_len:
        t0 = time.perf_counter()
        rules = rules_at_level(tree, k, cfg.confidence, cfg.min_oratio)
        rules.sort(key=lambda r: (r.lhs, r.target))
        jobs = [
            (r, rule_seed(seed, r.lhs, r.target),
             build_control_set(d, r.lhs, irrelevant, eps, frequent_items))
            for r in rules
        ]
        timing["association"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        if pool is not None and len(jobs) >= 32:
            results = list(pool.map(_test_in_worker, jobs, chunksize=8))
        else:
            results = [test_causal(d, r, mode, cfg.matcher, s, controls=c) for r, s, c in jobs]
        timing["causal"] += time.perf_counter() - t0
        tested.extend(results)
        found = [cr for cr in results if cr.causal]
        for cr in found:
            causal[cr.rule_id] = cr
        counts[k] = dict(tree.stats.get(k, {}), association_rules=len(rules), causal_rules=len(found))
        if cfg.prune:
            for lhs in sorted({cr.rule.lhs for cr in found}):
                tree.remove(lhs)
        k += 1
        if k <= cfg.max_len:
            t0 = time.perf_counter()
            tree.generate_level(k)
            timing["search"] += time.perf_counter() - t0
            if not tree.levels[k]:
                counts[k] = dict(tree.stats[k], association_rules=0, causal_rules=0)
                break
    return RunResult(seed, causal, tested, counts, dict(timing))


def mine(d: Dataset, cfg: MiningConfig = MiningConfig()) -> MiningReport:
    """Mine causal rules ``cfg.runs`` times and keep those found in enough runs."""
    started = time.perf_counter()
    pool = None
    if cfg.threads > 1:
        pool = ProcessPoolExecutor(cfg.threads, initializer=_init_worker,
                                   initargs=(d, cfg.causal_mode, cfg.matcher))
    try:
        results = [_run_once(d, cfg, run_seed(cfg.seed, r), pool) for r in range(cfg.runs)]
    finally:
        if pool is not None:
            pool.shutdown()

    rule_sets = [frozenset(res.causal) for res in results]
    keep = consensus(rule_sets, cfg.consensus_min)
    runs_containing = {
        rid: [i for i, s in enumerate(rule_sets) if rid in s]
        for rid in sorted(set().union(*rule_sets), key=lambda x: (len(x[0]), x))
    }
    chosen = []
    for rid in sorted(keep, key=lambda x: (len(x[0]), x)):
        hits = sorted((results[i].causal[rid].fair_or, i) for i in runs_containing[rid])
        chosen.append(results[hits[(len(hits) - 1) // 2][1]].causal[rid])

    timing = Counter()
    for res in results:
        timing.update(res.timing)
    timing["total"] = time.perf_counter() - started
    log.info("mined %d consensus rules from %d runs", len(chosen), cfg.runs)
    return MiningReport(
        causal_rules=chosen,
        per_run_rule_sets=rule_sets,
        runs_containing=runs_containing,
        level_counts=[res.level_counts for res in results],
        timing=dict(timing),
        config=cfg,
        tested_rules=results[0].tested,
    )


def read_rules_jsonl(path) -> tuple[dict, list]:
    """Parse a report written by :meth:`MiningReport.to_jsonl` into (header, rules)."""
    header, rules = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("type") == "report":
                header = obj
            elif obj.get("type") == "rule":
                rules.append(obj)
    return header, rules
