"""End-of-build acceptance checks.

Each test covers one agreed criterion and prints a single PASS/FAIL
line (visible under `pytest -s` or on failure). Heavy end-to-end
fixtures are shared at module scope.
"""
import math
import random
import time
from fractions import Fraction

import pytest

from fairabstain.calibration import compute_budget, fit_rejector, ubac_threshold
from fairabstain.classifier import ScoredInstance, fit_builtin
from fairabstain.engine import (ACTION_ABSTAIN_UNCERTAIN, ACTION_ABSTAIN_UNFAIR,
                                ACTION_FLIP, METHOD_FC, METHOD_IFAC,
                                METHOD_UBAC, decide_all, decide_ifac)
from fairabstain.manifest import DatasetManifest, Instance, load_dataset
from fairabstain.metrics import evaluate
from fairabstain.rules import (DecisionRule, Itemset, MiningConfig,
                               filter_high_slift, frequent_itemsets,
                               mine_rules, rule_applies, slift_of)
from fairabstain.situation import (STConfig, SituationTester,
                                   compute_distance_stats, distance)
from fairabstain.splits import resample_test, split_dataset
from fairabstain.synthetic import default_spec, write_synthetic

from test_rules import brute_force_frequent, brute_force_rules, worked_example


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------- unit-level

class TestBudgetIdentities:
    def test_randomized_sweep(self):
        rng = random.Random(0)
        start = time.perf_counter()
        for _ in range(10_000):
            n = rng.randint(1, 100_000)
            n_u = rng.randint(0, n)
            ci, wi = rng.randint(0, 100), rng.randint(0, 100)
            b = compute_budget(n, n_u, ci / 100, wi / 100)
            n_rej = math.ceil((1 - Fraction(ci, 100)) * n)
            assert b.N_rej == n_rej
            assert b.N_ufr == min(math.ceil(n_rej * Fraction(wi, 100)), n_u)
            assert b.N_ucr == b.N_rej - b.N_ufr
        elapsed = time.perf_counter() - start
        check("budget identities, 10000 random tuples", elapsed < 1.0,
              f"{elapsed:.2f}s")


class TestFilterEquivalence:
    def test_thousand_random_rules(self):
        rng = random.Random(1)
        start = time.perf_counter()
        agree = True
        for _ in range(1000):
            n_group, n_neg = rng.randint(1, 500), rng.randint(1, 500)
            conf = rng.randint(0, n_group) / n_group
            neg_conf = rng.randint(0, n_neg) / n_neg
            rule = DecisionRule(
                antecedent=Itemset(sensitive=frozenset({("g", "x")}),
                                   legal=frozenset()),
                consequent=0, support=0.05, confidence=conf,
                slift=conf - neg_conf, p_value=1e-6)
            kept = bool(filter_high_slift([rule], alpha=1.1))
            # explicit two-confidence comparison on the negated group
            oracle = neg_conf < 1.0 - neg_conf
            agree &= (kept == oracle)
        elapsed = time.perf_counter() - start
        check("filter equivalence on 1000 random rules",
              agree and elapsed < 1.0, f"{elapsed:.2f}s")


class TestAprioriOracle:
    def test_fifty_random_datasets(self):
        start = time.perf_counter()
        ok = True
        for seed in range(50):
            rng = random.Random(seed)
            m = DatasetManifest(
                sensitive_features=("sex",), legal_features=("edu", "occ"),
                target="y", positive_label="1", reference_group={"sex": "M"})
            # <= 12 distinct items: 2 sex + 2 edu + 3 occ values
            rows = []
            for i in range(rng.randint(10, 200)):
                v = {"sex": rng.choice(["M", "F"]),
                     "edu": rng.choice(["a", "b"]),
                     "occ": rng.choice(["x", "y", "z"])}
                inst = Instance(id=f"{i:04d}", values=v, raw_values=v)
                rows.append(ScoredInstance(inst, rng.choice([0.1, 0.9])))
            config = MiningConfig(min_support=rng.choice([0.01, 0.05, 0.1]),
                                  min_confidence=rng.choice([0.3, 0.6, 0.85]),
                                  reference_group=m.reference_group)
            mined = {(r.antecedent.items, r.consequent):
                     (r.support, r.confidence)
                     for r in mine_rules(rows, m, config)}
            ok &= mined == brute_force_rules(rows, m, config)

            transactions = [frozenset({("edu", s.instance.values["edu"]),
                                       ("occ", s.instance.values["occ"])})
                            for s in rows]
            min_count = rng.randint(1, 10)
            ok &= (frequent_itemsets(transactions, min_count)
                   == brute_force_frequent(transactions, min_count))
        elapsed = time.perf_counter() - start
        check("apriori vs exhaustive enumeration, 50 datasets",
              ok and elapsed < 30.0, f"{elapsed:.2f}s")


class TestSliftOracle:
    def test_worked_example_and_random_fixtures(self):
        rows, ante = worked_example()
        s = slift_of(ante, 0, rows)
        ok = (s == 9 / 10 - 4 / 10) and abs(s - 0.5) < 1e-12
        ok &= abs((9 / 10) - s - 0.40) < 1e-12   # negated-group confidence

        for seed in range(20):
            rng = random.Random(seed)
            rws = []
            for i in range(rng.randint(50, 300)):
                v = {"race": rng.choice(["B", "W", "O"]),
                     "edu": rng.choice(["HS", "MSc"])}
                inst = Instance(id=str(i), values=v, raw_values=v)
                rws.append(ScoredInstance(inst, rng.choice([0.2, 0.8])))
            a = Itemset(sensitive=frozenset({("race", "B")}),
                        legal=frozenset({("edu", "MSc")}))
            grp = [s for s in rws
                   if s.instance.values == {"race": "B", "edu": "MSc"}]
            neg = [s for s in rws if s.instance.values["edu"] == "MSc"
                   and s.instance.values["race"] != "B"]
            if not grp or not neg:
                continue
            expected = (sum(s.prediction == 0 for s in grp) / len(grp)
                        - sum(s.prediction == 0 for s in neg) / len(neg))
            ok &= abs(slift_of(a, 0, rws) - expected) < 1e-12
        check("slift worked example and 1e-12 two-pass oracle", ok)


class TestKnnOracle:
    MANIFEST = DatasetManifest(
        sensitive_features=("sex",), legal_features=("edu", "hours", "occ"),
        target="y", positive_label="1", reference_group={"sex": "M"},
        bins={"edu": (0, 8, 16, 25), "hours": (0, 20, 40, 80)})

    def inst(self, i, rng, sex=None, label=None):
        edu, hours = rng.uniform(0, 24), rng.uniform(0, 79)
        v = {"sex": sex or rng.choice(["M", "F"]),
             "edu": self.MANIFEST.bin_value("edu", edu),
             "hours": self.MANIFEST.bin_value("hours", hours),
             "occ": rng.choice(["tech", "service", "admin"])}
        raw = dict(v, edu=edu, hours=hours)
        return Instance(id=f"{i:05d}", values=v, raw_values=raw, label=label)

    def test_hundred_random_fixtures(self):
        ok = True
        for seed in range(100):
            rng = random.Random(seed)
            train = [self.inst(i, rng, label=rng.randint(0, 1))
                     for i in range(300)]
            cfg = STConfig(k=10, t=0.3,
                           distance_stats=compute_distance_stats(
                               train, self.MANIFEST))
            tester = SituationTester(train, self.MANIFEST, cfg)
            target = self.inst(9999, rng, sex="F")
            res = tester.test(target)
            for members, got in (
                    ([x for x in train if x.values["sex"] == "M"],
                     res.neighbors_ref),
                    ([x for x in train if x.values["sex"] != "M"],
                     res.neighbors_nonref)):
                scan = sorted(((distance(target, m, self.MANIFEST, cfg), m.id)
                               for m in members), key=lambda p: (p[0], p[1]))
                ok &= [n.instance.id for n in got] == [i for _, i in scan[:10]]
            by_id = {x.id: x for x in train}
            ok &= res.dec_r == sum(by_id[n.instance.id].label
                                   for n in res.neighbors_ref) / 10
            ok &= res.dec_nr == sum(by_id[n.instance.id].label
                                    for n in res.neighbors_nonref) / 10
        check("kNN neighbor sets vs exhaustive scan, 100 fixtures", ok)


# ------------------------------------------------------------- calibration

MANIFEST_SMALL = DatasetManifest(
    sensitive_features=("sex",), legal_features=("occ",),
    target="y", positive_label="1", reference_group={"sex": "M"})


def small_inst(i, sex, occ, label=None):
    v = {"sex": sex, "occ": occ}
    return Instance(id=f"{i:05d}", values=v, raw_values=v, label=label)


def small_train():
    train = [small_inst(i, "M", "sales", label=1) for i in range(12)]
    train += [small_inst(100 + i, "F", "sales", label=0) for i in range(12)]
    return train


def planted_rule():
    return DecisionRule(
        antecedent=Itemset(sensitive=frozenset({("sex", "F")}),
                           legal=frozenset({("occ", "sales")})),
        consequent=0, support=0.05, confidence=0.9, slift=0.6, p_value=1e-4)


class TestCalibrationCoverage:
    def test_exact_rejection_counts_without_ties(self):
        scored = []
        for i in range(400):
            sex = "F" if i % 2 else "M"
            occ = "sales" if i % 3 == 0 else "tech"
            # distinct confidences, mixed predictions
            margin = (i + 1) * 0.00115
            p = 0.5 + margin if i % 5 else 0.5 - margin
            scored.append(ScoredInstance(small_inst(i, sex, occ), p))
        assert len({s.confidence for s in scored}) == len(scored)
        c, w_u = 0.8, 1.0
        model, _ = fit_rejector(scored, [planted_rule()], small_train(),
                                MANIFEST_SMALL, STConfig(k=2, t=0.3), c, w_u)
        tester = SituationTester(small_train(), MANIFEST_SMALL, model.st_config)
        outcomes = [decide_ifac(model, s, tester) for s in scored]
        rejected = sum(o.action in (ACTION_ABSTAIN_UNCERTAIN,
                                    ACTION_ABSTAIN_UNFAIR) for o in outcomes)
        ok = rejected == model.budget.N_rej

        confs = [s.confidence for s in scored]
        tau = ubac_threshold(confs, c)
        ok &= sum(cf < tau for cf in confs) == math.ceil((1 - c) * len(confs))
        check("calibration-set rejection counts exact without ties", ok,
              f"rejected={rejected} target={model.budget.N_rej}")

    def test_held_out_coverage_within_two_points(self, tmp_path):
        c, worst = 0.8, 0.0
        ok = True
        for seed in range(10):
            csv, mpath = tmp_path / f"d{seed}.csv", tmp_path / f"m{seed}.json"
            write_synthetic(default_spec(n=5000, bias=0.6), seed, csv, mpath)
            manifest = DatasetManifest.load(mpath)
            bundle = split_dataset(load_dataset(csv, manifest), seed=seed)
            model_h = fit_builtin(bundle.train)
            config = MiningConfig(reference_group=manifest.reference_group)
            rules = filter_high_slift(
                mine_rules(model_h.score(bundle.val1), manifest, config),
                config.significance_alpha)
            st = STConfig(k=5, t=0.3, distance_stats=compute_distance_stats(
                bundle.train, manifest))
            model, _ = fit_rejector(model_h.score(bundle.val2), rules,
                                    bundle.train, manifest, st, c, 1.0)
            outs = decide_all(model, model_h.score(bundle.test),
                              bundle.train, manifest)
            realized = (sum(o.accepted for o in outs[METHOD_IFAC])
                        / len(outs[METHOD_IFAC]))
            worst = max(worst, abs(realized - c))
            ok &= abs(realized - c) <= 0.02
        check("held-out coverage within 2pp of target, 10 seeds", ok,
              f"worst gap {worst:.4f}")


class TestDegenerateRegimes:
    def scored_set(self):
        out = []
        for i in range(200):
            sex = "F" if i % 2 else "M"
            occ = "sales" if i % 3 == 0 else "tech"
            out.append(ScoredInstance(small_inst(i, sex, occ),
                                      0.5 + i * 0.0024))
        return out

    def test_zero_rules_reduces_to_ubac(self):
        scored = self.scored_set()
        model, _ = fit_rejector(scored, [], small_train(), MANIFEST_SMALL,
                                STConfig(k=2, t=0.3), c=0.8, w_u=1.0)
        outs = decide_all(model, scored, small_train(), MANIFEST_SMALL)
        ok = all(u.action == f.action and u.emitted_label == f.emitted_label
                 for u, f in zip(outs[METHOD_UBAC], outs[METHOD_IFAC]))
        check("zero filtered rules makes IFAC match UBAC outcome-for-outcome", ok)

    def test_full_coverage_has_no_abstentions(self):
        scored = self.scored_set()
        model, _ = fit_rejector(scored, [planted_rule()], small_train(),
                                MANIFEST_SMALL, STConfig(k=2, t=0.3),
                                c=1.0, w_u=1.0)
        outs = decide_all(model, scored, small_train(), MANIFEST_SMALL)
        ifac = outs[METHOD_IFAC]
        ok = all(o.accepted for o in ifac)
        for o in ifac:
            if o.action == ACTION_FLIP:
                ok &= o.verdict is not None and o.verdict.unfair
        check("c=1 yields zero abstentions and flips only on unfair cases", ok)

    def test_zero_situation_threshold_flags_every_covered_case(self):
        scored = self.scored_set()
        tester = SituationTester(small_train(), MANIFEST_SMALL,
                                 STConfig(k=2, t=0.0))
        rule = planted_rule()
        ok = True
        for s in scored:
            if not rule_applies(rule, s):
                continue
            res = tester.test(s.instance)
            ok &= res.flagged == (res.score >= 0.0)
        check("t=0 flags every rule-covered case with score >= 0", ok)


# ------------------------------------------------------- end-to-end (heavy)

@pytest.fixture(scope="module")
def planted_runs(tmp_path_factory):
    """Ten seeds of the n=20,000 planted-bias benchmark plus sweep cells."""
    tmp = tmp_path_factory.mktemp("planted")
    start = time.perf_counter()
    records = []
    for seed in range(10):
        csv, mpath = tmp / f"d{seed}.csv", tmp / f"m{seed}.json"
        write_synthetic(default_spec(n=20_000, bias=0.6), seed, csv, mpath)
        manifest = DatasetManifest.load(mpath)
        bundle = split_dataset(load_dataset(csv, manifest), seed=seed)
        model_h = fit_builtin(bundle.train)
        config = MiningConfig(reference_group=manifest.reference_group)
        rules = filter_high_slift(
            mine_rules(model_h.score(bundle.val1), manifest, config),
            config.significance_alpha)
        st = STConfig(k=10, t=0.3, distance_stats=compute_distance_stats(
            bundle.train, manifest))
        scored_val2 = model_h.score(bundle.val2)
        scored_test = model_h.score(bundle.test)
        resamples = resample_test(bundle.test, 10, seed)

        rec = {"seed": seed}
        for name, c, w_u in (("main", 0.8, 1.0),
                             ("c9_low", 0.9, 0.25),
                             ("c9_full", 0.9, 1.0)):
            model, _ = fit_rejector(scored_val2, rules, bundle.train,
                                    manifest, st, c, w_u)
            outs = decide_all(model, scored_test, bundle.train, manifest)
            reports = evaluate(outs, bundle.test, manifest, resamples)
            cell = {m: {"accuracy": reports[m].performance["accuracy"].mean,
                        "pdr_range": reports[m].disparity["pdr"]["range"],
                        "pdr_std": reports[m].disparity["pdr"]["std"]}
                    for m in (METHOD_FC, METHOD_UBAC, METHOD_IFAC)}
            rec[name] = cell
        records.append(rec)
    return records, time.perf_counter() - start


class TestDirectionalEndToEnd:
    def test_disparity_and_accuracy_ordering(self, planted_runs):
        records, elapsed = planted_runs
        range_wins = std_wins = acc_wins = 0
        fc_ranges = []
        for rec in records:
            cell = rec["main"]
            fc_ranges.append(cell[METHOD_FC]["pdr_range"])
            if cell[METHOD_IFAC]["pdr_range"] < cell[METHOD_UBAC]["pdr_range"]:
                range_wins += 1
            if cell[METHOD_IFAC]["pdr_std"] < cell[METHOD_UBAC]["pdr_std"]:
                std_wins += 1
            if (cell[METHOD_FC]["accuracy"] <= cell[METHOD_IFAC]["accuracy"]
                    <= cell[METHOD_UBAC]["accuracy"]):
                acc_wins += 1
        detail = (f"range {range_wins}/10, std {std_wins}/10, "
                  f"accuracy order {acc_wins}/10, "
                  f"mean FC pdr range {sum(fc_ranges) / 10:.3f}, "
                  f"{elapsed:.0f}s")
        check("directional end-to-end on planted bias",
              range_wins >= 8 and std_wins >= 8 and acc_wins >= 8
              and elapsed < 300, detail)

    def test_sweep_trend_lower_weight_keeps_disparity_leq(self, planted_runs):
        records, _ = planted_runs
        wins = sum(1 for rec in records
                   if rec["c9_low"][METHOD_IFAC]["pdr_range"]
                   <= rec["c9_full"][METHOD_IFAC]["pdr_range"])
        check("sweep trend at c=0.9: w_u=0.25 range <= w_u=1.0",
              wins >= 8, f"{wins}/10 seeds")
