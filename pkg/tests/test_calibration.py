import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairabstain.calibration import (TAU_ABOVE_MAX, TAU_BELOW_MIN,
                                     FairnessVerdict, RejectorModel,
                                     calibrate_thresholds, compute_budget,
                                     fit_rejector, partition_val2,
                                     ubac_threshold)
from fairabstain.classifier import ScoredInstance
from fairabstain.manifest import DatasetManifest, Instance
from fairabstain.rules import DecisionRule, Itemset
from fairabstain.situation import STConfig, SituationTester

MANIFEST = DatasetManifest(
    sensitive_features=("sex",),
    legal_features=("occ",),
    target="y",
    positive_label="1",
    reference_group={"sex": "M"},
)


def inst(i, sex="M", occ="tech", label=None):
    v = {"sex": sex, "occ": occ}
    return Instance(id=f"{i:05d}", values=v, raw_values=v, label=label)


def sc(i, p_pos, sex="M", occ="tech"):
    return ScoredInstance(inst(i, sex, occ), p_pos)


def rule_for(sex_value, occ_value, consequent=0):
    return DecisionRule(
        antecedent=Itemset(sensitive=frozenset({("sex", sex_value)}),
                           legal=frozenset({("occ", occ_value)})),
        consequent=consequent, support=0.05, confidence=0.9, slift=0.6,
        p_value=1e-4)


def biased_train(n_each=12):
    # men near occ=sales mostly positive, women mostly negative
    train = [inst(i, "M", "sales", label=1) for i in range(n_each)]
    train += [inst(100 + i, "F", "sales", label=0) for i in range(n_each)]
    return train


class TestComputeBudget:
    def test_printed_formulas(self):
        b = compute_budget(1000, 50, c=0.80, w_u=1.0)
        assert (b.N_rej, b.N_ufr, b.N_ucr) == (200, 50, 150)

    def test_full_coverage(self):
        b = compute_budget(1000, 50, c=1.0, w_u=1.0)
        assert (b.N_rej, b.N_ufr, b.N_ucr) == (0, 0, 0)

    def test_fractional_weight(self):
        b = compute_budget(100, 8, c=0.80, w_u=0.25)
        assert (b.N_rej, b.N_ufr, b.N_ucr) == (20, 5, 15)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            compute_budget(10, 2, c=1.5, w_u=1.0)
        with pytest.raises(ValueError):
            compute_budget(10, 2, c=0.5, w_u=-0.1)
        with pytest.raises(ValueError):
            compute_budget(10, 20, c=0.5, w_u=1.0)

    @given(n=st.integers(1, 5000), nu_frac=st.floats(0, 1),
           ci=st.integers(0, 100), wi=st.integers(0, 100))
    @settings(max_examples=300, deadline=None)
    def test_identities(self, n, nu_frac, ci, wi):
        n_u = int(nu_frac * n)
        c, w_u = ci / 100, wi / 100
        b = compute_budget(n, n_u, c, w_u)
        # exact-arithmetic oracle
        n_rej = math.ceil((1 - Fraction(ci, 100)) * n)
        assert b.N_rej == n_rej
        assert b.N_ufr == min(math.ceil(n_rej * Fraction(wi, 100)), n_u)
        assert b.N_ucr == b.N_rej - b.N_ufr
        assert b.N_ucr >= 0
        assert b.N_f + b.N_u == b.N

    def test_monotonicity(self):
        for n, n_u in ((100, 10), (537, 80)):
            prev_rej = -1
            for ci in range(100, -1, -10):
                b = compute_budget(n, n_u, ci / 100, 1.0)
                assert b.N_rej >= prev_rej
                prev_rej = b.N_rej
            prev_ufr = -1
            for wi in range(0, 101, 10):
                b = compute_budget(n, n_u, 0.8, wi / 100)
                assert b.N_ufr >= prev_ufr
                prev_ufr = b.N_ufr


class TestCalibrateThresholds:
    def test_fair_threshold_by_hand(self):
        fair = [sc(i, p) for i, p in enumerate([0.6, 0.7, 0.8, 0.9])]
        budget = compute_budget(4, 0, c=0.5, w_u=0.0)
        assert budget.N_ucr == 2
        tau_f, _ = calibrate_thresholds(fair, [], budget)
        assert tau_f == 0.8
        assert sum(s.confidence < tau_f for s in fair) == 2

    def test_zero_uncertainty_budget_uses_sentinel(self):
        fair = [sc(i, p) for i, p in enumerate([0.6, 0.7])]
        budget = compute_budget(2, 0, c=1.0, w_u=1.0)
        tau_f, _ = calibrate_thresholds(fair, [], budget)
        assert tau_f == TAU_BELOW_MIN
        assert all(s.confidence >= tau_f for s in fair)

    def test_unfair_threshold_by_hand(self):
        unfair = [sc(i, p) for i, p in enumerate([0.95, 0.9, 0.6])]
        budget = compute_budget(3, 3, c=1 / 3, w_u=1.0)
        assert budget.N_ufr == 2
        _, tau_u = calibrate_thresholds([], unfair, budget)
        assert tau_u == 0.9
        assert sum(s.confidence >= tau_u for s in unfair) == 2

    def test_all_unfair_abstain_sentinel(self):
        unfair = [sc(i, p) for i, p in enumerate([0.95, 0.9])]
        budget = compute_budget(2, 2, c=0.0, w_u=1.0)
        _, tau_u = calibrate_thresholds([], unfair, budget)
        assert tau_u == TAU_BELOW_MIN

    def test_no_unfair_rejections_sentinel(self):
        unfair = [sc(0, 0.9)]
        budget = compute_budget(10, 1, c=1.0, w_u=1.0)
        _, tau_u = calibrate_thresholds([sc(j, 0.7) for j in range(1, 10)],
                                        unfair, budget)
        assert tau_u == TAU_ABOVE_MAX
        assert all(s.confidence < tau_u for s in unfair)

    def test_exact_rejections_without_ties(self):
        fair = [sc(i, 0.5 + 0.004 * i) for i in range(100)]
        unfair = [sc(200 + i, 0.5 + 0.004 * i, "F", "sales") for i in range(20)]
        budget = compute_budget(120, 20, c=0.75, w_u=0.5)
        tau_f, tau_u = calibrate_thresholds(fair, unfair, budget)
        realized = (sum(s.confidence < tau_f for s in fair)
                    + sum(s.confidence >= tau_u for s in unfair))
        assert realized == budget.N_rej

    def test_tie_overshoot_bounded_by_tie_class(self):
        fair = [sc(i, 0.7) for i in range(10)]
        budget = compute_budget(10, 0, c=0.5, w_u=0.0)
        tau_f, _ = calibrate_thresholds(fair, [], budget)
        below = sum(s.confidence < tau_f for s in fair)
        # all confidences tie: either everything or nothing falls below
        assert abs(below - budget.N_ucr) <= 10


class TestUbacThreshold:
    def test_leaves_exact_count_below(self):
        confs = [0.5 + i * 0.005 for i in range(100)]
        tau = ubac_threshold(confs, c=0.8)
        assert sum(cf < tau for cf in confs) == 20

    def test_full_coverage_sentinel(self):
        assert ubac_threshold([0.6, 0.9], c=1.0) == TAU_BELOW_MIN

    def test_zero_coverage_sentinel(self):
        assert ubac_threshold([0.6, 0.9], c=0.0) == TAU_ABOVE_MAX


class TestPartitionVal2:
    def st_config(self):
        return STConfig(k=2, t=0.3)

    def test_no_rules_means_all_fair(self):
        tester = SituationTester(biased_train(), MANIFEST, self.st_config())
        scored = [sc(i, 0.2, "F", "sales") for i in range(5)]
        fair, unfair, verdicts = partition_val2(scored, [], tester)
        assert len(fair) == 5 and not unfair
        assert all(not v.unfair for v in verdicts.values())

    def test_rule_plus_flagged_st_is_unfair(self):
        tester = SituationTester(biased_train(), MANIFEST, self.st_config())
        target = sc(0, 0.2, "F", "sales")     # predicted 0, covered by rule
        fair, unfair, verdicts = partition_val2(
            [target], [rule_for("F", "sales")], tester)
        assert unfair == [target]
        v = verdicts[target.instance.id]
        assert v.unfair and v.rule is not None and v.situation.flagged

    def test_rule_without_st_flag_stays_fair(self):
        # balanced training labels -> situation score 0 < t
        train = [inst(i, "M", "sales", label=i % 2) for i in range(10)]
        train += [inst(100 + i, "F", "sales", label=i % 2) for i in range(10)]
        tester = SituationTester(train, MANIFEST, self.st_config())
        target = sc(0, 0.2, "F", "sales")
        fair, unfair, verdicts = partition_val2(
            [target], [rule_for("F", "sales")], tester)
        assert fair == [target]
        assert not verdicts[target.instance.id].unfair

    def test_st_failure_falls_back_to_fair(self):
        train = [inst(i, "M", "sales", label=1) for i in range(5)]  # no F pool
        tester = SituationTester(train, MANIFEST, self.st_config())
        target = sc(0, 0.2, "F", "sales")
        fair, unfair, verdicts = partition_val2(
            [target], [rule_for("F", "sales")], tester)
        assert fair == [target]
        v = verdicts[target.instance.id]
        assert v.st_failed and not v.unfair

    def test_two_pass_oracle_on_planted_fixture(self):
        tester = SituationTester(biased_train(), MANIFEST, self.st_config())
        rules = [rule_for("F", "sales")]
        scored = []
        for i in range(100):
            sex = "F" if i % 2 else "M"
            occ = "sales" if i % 3 == 0 else "tech"
            p = 0.2 if sex == "F" else 0.8
            scored.append(sc(i, p, sex, occ))
        fair, unfair, _ = partition_val2(scored, rules, tester)
        # independent two-pass filter: rule coverage then situation test
        covered = [s for s in scored
                   if s.instance.values == {"sex": "F", "occ": "sales"}
                   and s.prediction == 0]
        flagged = [s for s in covered
                   if tester.test(s.instance).flagged]
        assert sorted(s.instance.id for s in unfair) == \
               sorted(s.instance.id for s in flagged)
        assert len(fair) + len(unfair) == 100


class TestRejectorModel:
    def test_fit_and_roundtrip(self, tmp_path):
        train = biased_train()
        scored = [sc(i, 0.55 + 0.004 * i, "F" if i % 2 else "M",
                     "sales" if i % 3 == 0 else "tech") for i in range(100)]
        model, verdicts = fit_rejector(
            scored, [rule_for("F", "sales")], train, MANIFEST,
            STConfig(k=2, t=0.3), c=0.8, w_u=1.0)
        assert model.budget.N == 100
        assert len(verdicts) == 100
        model.save(tmp_path / "model.json")
        assert RejectorModel.load(tmp_path / "model.json") == model
