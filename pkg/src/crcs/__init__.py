"""Causal rule mining: odds-ratio association rules tested by matched cohorts."""

from .association import (
    AssociationRule,
    ContingencyTable,
    PrefixTree,
    PrefixTreeNode,
    evaluate_rule,
    generate_level,
    odds_ratio,
    or_confidence_interval,
    rules_at_level,
)
from .cohort import (
    EXACT,
    CausalMode,
    CausalRule,
    ControlSet,
    FairDataset,
    Matcher,
    MatchedPairTable,
    build_control_set,
    build_fair_dataset,
    fair_odds_ratio,
    find_exclusive,
    find_irrelevant,
    matched_ci,
    test_causal,
)
from .dataset import Dataset, Item, LoadSummary, load_csv
from .engine import MiningConfig, MiningReport, consensus, mine, read_rules_jsonl
from .errors import (
    ConfigurationError,
    ContractViolation,
    CRCSError,
    GenerationError,
    InputError,
    ParseError,
    UndefinedStatisticError,
)
from .synthetic import GroundTruth, Score, generate_bn, generate_combined, generate_logistic, score

__version__ = "0.1.0"

__all__ = [
    "AssociationRule",
    "build_control_set",
    "build_fair_dataset",
    "CausalMode",
    "CausalRule",
    "ConfigurationError",
    "consensus",
    "ContingencyTable",
    "ContractViolation",
    "ControlSet",
    "CRCSError",
    "Dataset",
    "evaluate_rule",
    "EXACT",
    "fair_odds_ratio",
    "FairDataset",
    "find_exclusive",
    "find_irrelevant",
    "generate_bn",
    "generate_combined",
    "generate_level",
    "generate_logistic",
    "GenerationError",
    "GroundTruth",
    "InputError",
    "Item",
    "load_csv",
    "LoadSummary",
    "matched_ci",
    "MatchedPairTable",
    "Matcher",
    "mine",
    "MiningConfig",
    "MiningReport",
    "odds_ratio",
    "or_confidence_interval",
    "ParseError",
    "PrefixTree",
    "PrefixTreeNode",
    "read_rules_jsonl",
    "rules_at_level",
    "Score",
    "score",
    "test_causal",
    "UndefinedStatisticError",
]
