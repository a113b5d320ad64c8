"""Odds-ratio association rules mined level-wise over a prefix tree."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

from .dataset import Dataset, Pattern
from .errors import ContractViolation

TARGETS = ("z", "not_z")

_CRITICAL = {0.95: 1.96, 0.99: 2.576}


def critical_value(confidence: float) -> float:
    """Two-sided normal critical value; the tabulated 1.96 / 2.576 for 95% / 99%."""
    if confidence in _CRITICAL:
        return _CRITICAL[confidence]
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    return NormalDist().inv_cdf((1 + confidence) / 2)


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 counts of a rule: a=supp(pz), b=supp(p~z), c=supp(~pz), d=supp(~p~z)."""

    a: int
    b: int
    c: int
    d: int

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def degenerate(self) -> bool:
        # an empty row or column margin carries no association information
        return (self.a + self.b == 0 or self.c + self.d == 0
                or self.a + self.c == 0 or self.b + self.d == 0)

    def swapped(self) -> "ContingencyTable":
        """Table of the same pattern with the response values exchanged."""
        return ContingencyTable(self.b, self.a, self.d, self.c)

    @classmethod
    def of(cls, d: Dataset, count_z: int, count_notz: int, target: str = "z"):
        t = cls(count_z, count_notz, d.n_z - count_z, d.n_notz - count_notz)
        return t if target == "z" else t.swapped()


def _nz(x: int) -> int:
    return x if x > 0 else 1


def odds_ratio(t: ContingencyTable) -> float:
    return (_nz(t.a) * _nz(t.d)) / (_nz(t.b) * _nz(t.c))


def or_confidence_interval(t: ContingencyTable, confidence: float = 0.95) -> tuple[float, float]:
    a, b, c, d = _nz(t.a), _nz(t.b), _nz(t.c), _nz(t.d)
    log_or = math.log(a * d / (b * c))
    half = critical_value(confidence) * math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    return math.exp(log_or - half), math.exp(log_or + half)


@dataclass(frozen=True)
class AssociationRule:
    lhs: Pattern
    target: str
    table: ContingencyTable
    odds_ratio: float
    ci_low: float
    ci_high: float
    significant: bool

    @property
    def rule_id(self) -> tuple:
        return (self.lhs, self.target)


def evaluate_rule(lhs: Pattern, table: ContingencyTable, target: str,
                  confidence: float = 0.95, min_oratio: float | None = None) -> AssociationRule:
    """Score one rule; significance is ``ci_low > 1`` unless ``min_oratio`` is set."""
    omega = odds_ratio(table)
    lo, hi = or_confidence_interval(table, confidence)
    if table.degenerate:
        sig = False
    elif min_oratio is not None:
        sig = omega > min_oratio
    else:
        sig = lo > 1.0
    return AssociationRule(lhs, target, table, omega, lo, hi, sig)


@dataclass(eq=False)
class PrefixTreeNode:
    label: int
    pattern: Pattern
    parent: "PrefixTreeNode | None" = None
    count_z: int = 0
    count_notz: int = 0
    cover: int = 0
    children: list = field(default_factory=list)
    backtrack_links: dict = field(default_factory=dict)
    removed: bool = False

    @property
    def support(self) -> int:
        return self.count_z + self.count_notz

    def __repr__(self):
        return f"Node({self.pattern}, z={self.count_z}, notz={self.count_notz})"


class PrefixTree:
    """Ordered prefix tree of candidate patterns.

    ``levels[k]`` lists the live nodes of length ``k`` in lexicographic order and
    ``index`` maps each live pattern to its node.
    """

    def __init__(self, d: Dataset, max_len: int, delta: float, prune_equal: bool = True):
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        if not 0 <= delta < 1:
            raise ValueError("delta must be in [0, 1)")
        self.d = d
        self.max_len = max_len
        self.delta = delta
        self.prune_equal = prune_equal
        self.root = PrefixTreeNode(label=-1, pattern=(), cover=d.all_bits,
                                   count_z=d.n_z, count_notz=d.n_notz)
        self.levels: dict[int, list[PrefixTreeNode]] = {}
        self.index: dict[Pattern, PrefixTreeNode] = {}
        self.stats: dict[int, dict] = {}

    def frequent(self, node: PrefixTreeNode) -> bool:
        """True when local support exceeds delta for at least one target."""
        d = self.d
        ok_z = d.n_z > 0 and node.count_z / d.n_z > self.delta
        ok_nz = d.n_notz > 0 and node.count_notz / d.n_notz > self.delta
        return ok_z or ok_nz

    def _count(self, node: PrefixTreeNode) -> None:
        node.count_z = (node.cover & self.d.z_bits).bit_count()
        node.count_notz = node.cover.bit_count() - node.count_z

    def _attach(self, parent: PrefixTreeNode, node: PrefixTreeNode) -> None:
        parent.children.append(node)
        self.index[node.pattern] = node

    def _detach(self, node: PrefixTreeNode) -> None:
        node.removed = True
        self.index.pop(node.pattern, None)
        if node.parent is not None and node in node.parent.children:
            node.parent.children.remove(node)
        for child in node.children:
            self._detach_subtree(child)
        node.children = []

    def _detach_subtree(self, node: PrefixTreeNode) -> None:
        node.removed = True
        self.index.pop(node.pattern, None)
        for child in node.children:
            self._detach_subtree(child)

    def remove(self, pattern: Pattern) -> None:
        """Drop a node and its subtree; later joins can no longer use it."""
        node = self.index.get(pattern)
        if node is None:
            return
        self._detach(node)
        k = len(pattern)
        if k in self.levels:
            self.levels[k] = [nd for nd in self.levels[k] if not nd.removed]

    def generate_level(self, k: int) -> list[PrefixTreeNode]:
        if k > self.max_len:
            raise ContractViolation(f"level {k} exceeds maximum rule length {self.max_len}")
        if k == 1:
            return self._seed()
        if k - 1 not in self.levels:
            raise ContractViolation(f"level {k - 1} has not been generated")
        d = self.d
        generated = 0
        support_pruned = 0
        equal_pruned = 0
        out: list[PrefixTreeNode] = []
        for parent in self.levels[k - 1]:
            parent.children = []
        for parent in self.levels[k - 1]:
            if parent.removed:
                continue
            siblings = parent.parent.children if k > 2 else self.levels[1]
            # siblings share parent's prefix; join with each later one
            pos = siblings.index(parent)
            for sib in siblings[pos + 1:]:
                pattern = parent.pattern + (sib.label,)
                links = {}
                complete = True
                # every immediate sub-pattern must still be live
                for drop in range(k - 2):
                    sub = pattern[:drop] + pattern[drop + 1:]
                    node = self.index.get(sub)
                    if node is None:
                        complete = False
                        break
                    links[sub] = node
                if not complete:
                    continue
                links[pattern[:-1]] = parent
                links[pattern[:-2] + pattern[-1:]] = sib
                generated += 1
                node = PrefixTreeNode(label=sib.label, pattern=pattern, parent=parent,
                                      cover=parent.cover & d.columns[sib.label],
                                      backtrack_links=links)
                self._count(node)
                if not self.frequent(node):
                    support_pruned += 1
                    continue
                if self.prune_equal and any(node.support == sub.support for sub in links.values()):
                    equal_pruned += 1
                    continue
                parent.children.append(node)
                out.append(node)
        for node in out:
            self.index[node.pattern] = node
        self.levels[k] = out
        self.stats[k] = {"candidates": generated, "support_pruned": support_pruned,
                         "equal_support_pruned": equal_pruned, "frequent": len(out)}
        return out

    def _seed(self) -> list[PrefixTreeNode]:
        d = self.d
        out = []
        pruned = 0
        for item in d.predictors:
            node = PrefixTreeNode(label=item, pattern=(item,), parent=self.root,
                                  cover=d.columns[item])
            self._count(node)
            if not self.frequent(node):
                pruned += 1
                continue
            out.append(node)
        self.root.children = list(out)
        for node in out:
            self.index[node.pattern] = node
        self.levels[1] = out
        self.stats[1] = {"candidates": len(d.predictors), "support_pruned": pruned,
                         "equal_support_pruned": 0, "frequent": len(out)}
        return out

    def patterns(self, k: int) -> list[Pattern]:
        return [nd.pattern for nd in self.levels.get(k, []) if not nd.removed]


def generate_level(tree: PrefixTree, k: int) -> list[Pattern]:
    return [nd.pattern for nd in tree.generate_level(k)]


def rules_at_level(tree: PrefixTree, k: int, confidence: float = 0.95,
                   min_oratio: float | None = None, significant_only: bool = True):
    """Association rules for every live k-pattern and both response values."""
    rules = []
    for node in tree.levels.get(k, []):
        if node.removed:
            continue
        for target in TARGETS:
            table = ContingencyTable.of(tree.d, node.count_z, node.count_notz, target)
            rule = evaluate_rule(node.pattern, table, target, confidence, min_oratio)
            if rule.significant or not significant_only:
                rules.append(rule)
    return rules
