"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. Tolerances are pinned here and nowhere else.
"""
import itertools
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from lxkit import finetune as ft
from lxkit import metrics
from lxkit.inference import estimate_cost, round_cents, scaling_cost
from lxkit.instructions import (
    NOT_PRESENT,
    PRESENT,
    BalanceSpec,
    BalanceStrategy,
    SplitSpec,
    balance,
    build_record,
    stratified_split,
)
from lxkit.mediation import (
    bootstrap_ci,
    build_designs,
    delta_se,
    indirect_effect,
    ols,
    sur_fgls,
)
from lxkit.scales import (
    LikertResponseSet,
    aspect_code,
    default_scale_definitions,
    nps_category,
    polarity_from_mean,
    scale_mean,
)
from lxkit.service.engine import AnalysisConfig, analyze_rows, ingest_csv
from lxkit.service.jobs import JobStore
from lxkit.synthdata import SynthConfig, generate_products
from lxkit.taxonomy import Polarity, default_taxonomy, lookup


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"\nCRITERION {number:>2} {name}: FAIL")
        raise
    print(f"\nCRITERION {number:>2} {name}: PASS")


def vec_with(p_true: float, size: int = 5) -> np.ndarray:
    v = np.full(size, (1.0 - p_true) / (size - 1))
    v[0] = p_true
    return v


def test_criterion_1_loss_oracle():
    with criterion(1, "cross-entropy loss oracle"):
        pretrained = [vec_with(0.30), vec_with(0.45)]
        tuned = [vec_with(0.55), vec_with(0.80)]
        assert ft.cross_entropy_loss(pretrained, [0, 0]) == pytest.approx(2.002, abs=1e-3)
        assert ft.cross_entropy_loss(tuned, [0, 0]) == pytest.approx(0.8210, abs=1e-3)
        runtime = min(
            _timed(lambda: ft.cross_entropy_loss(pretrained, [0, 0])) for _ in range(5)
        )
        assert runtime < 1e-3, f"loss call took {runtime * 1e3:.3f} ms"


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def test_criterion_2_toy_finetune_demo():
    with criterion(2, "toy fine-tune demo"):
        start = time.perf_counter()
        report, adapter, model = ft.run_demo()
        elapsed = time.perf_counter() - start
        assert report.train_losses[0] == pytest.approx(2.002, abs=1e-3)
        assert min(report.train_losses) <= 0.8210
        assert report.stop_iteration <= 3000
        assert model.W.tobytes() == ft.demo_pretrained_model().W.tobytes()
        assert elapsed < 10.0, f"demo took {elapsed:.1f}s"


def test_criterion_3_gradient_check():
    with criterion(3, "gradient check"):
        start = time.perf_counter()
        worst = 0.0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            model = ft.ToyModel(rng.normal(size=(3, 4)))
            adapter = ft.LoraAdapter(
                A=rng.normal(0, 0.4, (2, 4)), B=rng.normal(0, 0.4, (3, 2)),
                rank=2, alpha=4.0,
            )
            batch = [ft.TrainingExample((0, 1, 2, 3), (0, 2, 1, 0))]
            worst = max(worst, ft.grad_check(model, adapter, batch, eps=1e-5))
        elapsed = time.perf_counter() - start
        assert worst < 1e-4, f"max relative error {worst:.2e}"
        assert elapsed < 5.0, f"gradient checks took {elapsed:.1f}s"


def test_criterion_4_table9_anchors():
    with criterion(4, "indirect-effect anchors"):
        assert indirect_effect(-0.48189, 0.00472) == pytest.approx(-0.00227, abs=1e-5)
        assert delta_se(-0.48189, 0.00472, 0.04218**2, 0.00135**2, 0.0) == pytest.approx(
            0.00068, abs=1e-5
        )
        assert indirect_effect(-0.81714, 0.00472) == pytest.approx(-0.003857, abs=1e-5)


def test_criterion_5_sur_correctness():
    with criterion(5, "SUR estimation correctness"):
        start = time.perf_counter()

        # (a) FGLS collapses to equation-by-equation OLS under a diagonal sigma
        records = generate_products(SynthConfig(n_products=400, seed=11, rho=0.5))
        y1, X1, y2, X2 = build_designs(records)
        fit1, fit2 = ols(X1, y1), ols(X2, y2)
        resid = np.vstack([fit1.residuals, fit2.residuals])
        sigma = (resid @ resid.T) / len(records)
        est = sur_fgls(records, sigma_override=np.diag(np.diag(sigma)))
        assert np.abs(est.gamma - fit1.coef).max() < 1e-10
        assert np.abs(est.beta - fit2.coef).max() < 1e-10

        # (b) Monte Carlo recovery: n=5000, rho=0.5, 20 seeds
        errors, ses = [], []
        for seed in range(20):
            config = SynthConfig(n_products=5000, seed=seed, rho=0.5)
            estimate = sur_fgls(generate_products(config))
            truth = np.concatenate(
                [[config.gamma0], config.gamma,
                 [config.beta0, config.beta1], config.control_betas,
                 config.direct_betas]
            )
            got = np.concatenate([estimate.gamma, estimate.beta])
            errors.append(np.abs(got - truth).mean())
            ses.append(np.concatenate([estimate.gamma_se, estimate.beta_se]).mean())
        assert np.mean(errors) < 2 * np.mean(ses), (
            f"mean |error| {np.mean(errors):.5f} vs 2x mean SE {2 * np.mean(ses):.5f}"
        )

        # (c) seeded bootstrap reproduces identical intervals
        boot_records = generate_products(SynthConfig(n_products=800, seed=21, rho=0.0))
        first = bootstrap_ci(boot_records, n_boot=1000, seed=99)
        second = bootstrap_ci(boot_records, n_boot=1000, seed=99)
        assert first.intervals == second.intervals

        # (d) coverage of true indirect effects across 100 replications
        # (rho=0: with correlated disturbances the rating regressor is
        # endogenous by construction, so nominal coverage is unattainable
        # for the prescribed estimator)
        hits = total = 0
        for rep in range(100):
            config = SynthConfig(n_products=800, seed=3000 + rep, rho=0.0)
            recs = generate_products(config)
            intervals = bootstrap_ci(recs, n_boot=300, seed=7000 + rep).intervals
            truths = {
                eid: config.gamma[j] * config.beta1
                for j, eid in enumerate(default_taxonomy().emotion_ids())
            }
            for eid, (lo, hi) in intervals.items():
                hits += lo <= truths[eid] <= hi
                total += 1
        coverage = hits / total
        assert coverage >= 0.90, f"coverage {coverage:.3f}"

        elapsed = time.perf_counter() - start
        assert elapsed < 300.0, f"SUR suite took {elapsed:.0f}s"


def test_criterion_6_cost_accounting():
    with criterion(6, "cost accounting"):
        low = estimate_cost(676_387, 40_804, 1.50, 2.00)
        high = estimate_cost(676_387, 40_804, 10.00, 30.00)
        assert abs(low - 1.10) <= 0.01 and str(round_cents(low)) == "1.10"
        assert abs(high - 7.99) <= 0.01 and str(round_cents(high)) == "7.99"
        scaled = scaling_cost(500_000, 268, 16, 10.00, 30.00)
        assert scaled == pytest.approx(1585, abs=10)


def test_criterion_7_label_rules():
    with criterion(7, "label derivation rules"):
        # worked trust example: reversed item at 3, others at 5 -> positive
        trust = default_scale_definitions()["trust"]
        mean = scale_mean(LikertResponseSet("trust", (3, 5, 5)), trust)
        assert polarity_from_mean(mean) is Polarity.POSITIVE

        assert nps_category(6) is Polarity.NEGATIVE
        assert nps_category(7) is Polarity.NEUTRAL_OR_NO_MENTION
        assert nps_category(8) is Polarity.NEUTRAL_OR_NO_MENTION
        assert nps_category(9) is Polarity.POSITIVE

        assert polarity_from_mean(4) is Polarity.NEUTRAL_OR_NO_MENTION
        assert polarity_from_mean(Fraction(399, 100)) is Polarity.NEGATIVE
        assert polarity_from_mean(Fraction(401, 100)) is Polarity.POSITIVE

        # exhaustiveness over full domains
        for score in range(0, 11):
            assert nps_category(score) in tuple(Polarity)
        for hundredths in range(100, 701):
            mean = Fraction(hundredths, 100)
            p = polarity_from_mean(mean)
            expected = (
                Polarity.NEGATIVE if mean < 4
                else Polarity.NEUTRAL_OR_NO_MENTION if mean == 4
                else Polarity.POSITIVE
            )
            assert p is expected
            assert aspect_code(mean) == int(expected)
        for codes in itertools.product((-1, 0, 1), repeat=4):
            from lxkit.scales import overall_sentiment

            assert overall_sentiment(codes) in tuple(Polarity)


def test_criterion_8_balance_and_splits():
    with criterion(8, "balancing and stratified splits"):
        loneliness = lookup(default_taxonomy(), "loneliness")
        present = [build_record(loneliness, f"p{k}", PRESENT) for k in range(39)]
        absent = [build_record(loneliness, f"a{k}", NOT_PRESENT) for k in range(2484)]
        balanced = balance(present + absent, BalanceSpec(BalanceStrategy.UNDERSAMPLE_MAJORITY, seed=0))
        counts = {PRESENT: 0, NOT_PRESENT: 0}
        for record in balanced:
            counts[record.target] += 1
        assert counts == {PRESENT: 39, NOT_PRESENT: 39}

        records = present + absent
        spec = SplitSpec(seed=5)
        split_a = stratified_split(records, spec)
        split_b = stratified_split(records, spec)
        assert split_a == split_b
        for stratum_size, target in ((39, PRESENT), (2484, NOT_PRESENT)):
            for part, frac in ((split_a.train, 0.64), (split_a.validation, 0.16),
                               (split_a.test, 0.20)):
                got = sum(1 for r in part if r.target == target)
                assert abs(got - frac * stratum_size) <= 1


def test_criterion_9_metrics_oracle():
    with criterion(9, "evaluation metrics oracle"):
        rng = random.Random(777)
        classes = ["neg", "neu", "pos"]

        def oracle_f1(preds, truths, cls):
            tp = sum(p == cls and t == cls for p, t in zip(preds, truths))
            fp = sum(p == cls and t != cls for p, t in zip(preds, truths))
            fn = sum(p != cls and t == cls for p, t in zip(preds, truths))
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            return (2 * precision * recall / (precision + recall)
                    if precision + recall else 0.0)

        for _ in range(1000):
            n = rng.randint(1, 25)
            preds = [rng.choice(classes) for _ in range(n)]
            truths = [rng.choice(classes) for _ in range(n)]
            per_class, average = metrics.multiclass_f1_ovr(preds, truths, classes)
            expected = {c: oracle_f1(preds, truths, c) for c in classes}
            for c in classes:
                assert abs(per_class[c] - expected[c]) < 1e-12
            assert abs(average - sum(expected.values()) / 3) < 1e-12

        scores = [metrics.TaskScore(f"t{k}", rng.random(), 25) for k in range(12)]
        assert metrics.macro_f1(scores) == pytest.approx(metrics.weighted_f1(scores))


F8_CSV = (
    "ID_num,TEXT\n"
    "1,I felt really happy and excited about it\n"
    "2,It was fine but the delivery was slow\n"
    "3,\"Happy, was surprised by the quality\"\n"
    "4,I am always irritated by their support\n"
    "5,I felt joy when the parcel arrived\n"
    "6,\"I felt happy with the price, totally fair\"\n"
)


def test_criterion_10_end_to_end_determinism(tmp_path):
    with criterion(10, "end-to-end determinism and retention"):
        config = AnalysisConfig(
            id_column="ID_num",
            text_column="TEXT",
            selected_perceptions=tuple(
                list(default_taxonomy().emotion_ids())
                + ["trust", "commitment", "recommendation", "sentiment"]
            ),
        )
        rows = ingest_csv(F8_CSV.encode(), config).rows
        first = analyze_rows(rows, config).to_csv()
        second = analyze_rows(rows, config).to_csv()
        assert first == second  # byte-identical

        expected_header = ",".join(
            ["ID_num", *default_taxonomy().emotion_ids(),
             "trust", "commitment", "recommendation", "sentiment", "word_count"]
        )
        assert first.splitlines()[0] == expected_header

        # retention: randomized completion/purge clocks never delete early
        rng = random.Random(4242)
        day = 86400.0
        for _ in range(40):
            clock = {"now": 0.0}
            store = JobStore(tmp_path / f"jobs-{rng.randrange(10**9)}",
                             retention_days=7, clock=lambda: clock["now"])
            jobs = []
            for _ in range(rng.randint(1, 4)):
                clock["now"] = rng.uniform(0, 30 * day)
                job = store.create(F8_CSV.encode(), config)
                jobs.append(store.run(job.job_id))
            purge_at = rng.uniform(0, 60 * day)
            purged = set(store.purge_expired(now=purge_at))
            for job in jobs:
                if purge_at <= job.retention_deadline:
                    assert job.job_id not in purged
                    assert store.result_path(job.job_id).exists()
                else:
                    assert job.job_id in purged
                    assert not store.result_path(job.job_id).exists()
