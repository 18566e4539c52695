"""Fairness-aware abstaining classification toolkit."""

from .calibration import (RejectBudget, RejectorModel, compute_budget,
                          calibrate_thresholds, fit_rejector, partition_val2,
                          ubac_threshold)
from .classifier import (ExternalTableModel, LogisticItemModel, ProbClassifier,
                         ScoredInstance, fit_builtin, load_external)
from .engine import SelectiveOutcome, decide_all, decide_fc, decide_ifac, decide_ubac
from .manifest import DatasetManifest, Instance, load_dataset
from .metrics import evaluate, sweep
from .rules import (DecisionRule, Itemset, MiningConfig,
                    enumerate_sensitive_itemsets, filter_high_slift,
                    frequent_itemsets, mine_rules, rule_applies, slift_of,
                    two_proportion_z)
from .situation import STConfig, STResult, SituationTester, situation_test
from .splits import SplitBundle, resample_test, split_dataset
from .synthetic import SyntheticSpec, default_spec, generate_synthetic

__version__ = "0.1.0"
