import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lxkit.errors import (
    NegativeVariance,
    NonPositiveControl,
    RankDeficient,
    Underdetermined,
)
from lxkit.mediation import (
    EMOTION_COUNT,
    MediationClass,
    ProductRecord,
    Review,
    aggregate_reviews,
    bootstrap_ci,
    build_designs,
    classify_mediation,
    delta_se,
    indirect_effect,
    mediation_report,
    ols,
    prepare_controls,
    read_product_csv,
    sur_fgls,
    write_product_csv,
)
from lxkit.synthdata import (
    SynthConfig,
    generate_products,
    null_config,
    true_indirect_effects,
)

# Anchor values for the worked mediation example (rating-equation anger and
# discontent rows, and the rating->purchase path).
ANGER_GAMMA, ANGER_GAMMA_SE = -0.48189, 0.04218
DISCONTENT_GAMMA, DISCONTENT_GAMMA_SE = -0.81714, 0.03204
BETA1, BETA1_SE = 0.00472, 0.00135

FIXTURE = SynthConfig(seed=2, rho=0.0)


def flags(*indices: int) -> tuple[int, ...]:
    v = [0] * EMOTION_COUNT
    for i in indices:
        v[i] = 1
    return tuple(v)


# -- review aggregation --

def test_aggregate_anger_fraction():
    reviews = [
        Review("p1", rating=4, emotion_flags=flags(0) if k < 5 else flags(), word_count=20)
        for k in range(20)
    ]
    (agg,) = aggregate_reviews(reviews)
    assert agg.emotions[0] == pytest.approx(0.25)
    assert agg.review_count == 20


def test_aggregate_single_review():
    joy_index = 13
    (agg,) = aggregate_reviews([Review("p", 5, flags(joy_index), 12)])
    assert agg.average_rating == 5
    assert agg.emotions[joy_index] == 1.0
    assert sum(agg.emotions) == 1.0
    assert agg.mean_word_count == 12


def test_aggregate_mean_rating():
    reviews = [Review("p", r, flags(), 10) for r in (1, 2, 3, 4)]
    (agg,) = aggregate_reviews(reviews)
    assert agg.average_rating == pytest.approx(2.5)


def test_aggregate_skips_empty_products_with_warning():
    reviews = [Review("present", 4, flags(), 10)]
    with pytest.warns(UserWarning, match="missing"):
        out = aggregate_reviews(reviews, product_ids=["present", "missing"])
    assert [a.product_id for a in out] == ["present"]


def test_aggregate_outputs_bounded():
    rng = np.random.default_rng(0)
    reviews = [
        Review(f"p{k % 7}", float(rng.integers(1, 6)),
               tuple(int(b) for b in rng.integers(0, 2, EMOTION_COUNT)), int(rng.integers(5, 80)))
        for k in range(200)
    ]
    for agg in aggregate_reviews(reviews):
        assert all(0.0 <= e <= 1.0 for e in agg.emotions)
        assert 1.0 <= agg.average_rating <= 5.0


# -- controls --

def test_prepare_controls():
    c = prepare_controls(1.0, math.e, math.e**2, math.e**3)
    assert c.log_price == pytest.approx(0.0)
    assert c.log_volume == pytest.approx(1.0)
    assert c.log_views == pytest.approx(2.0)
    assert c.log_length == pytest.approx(3.0)


def test_prepare_controls_nonpositive():
    with pytest.raises(NonPositiveControl):
        prepare_controls(1.0, 0.0, 1.0, 1.0)


def test_prepare_controls_log_toggle():
    c = prepare_controls(1.0, 250.0, 1.0, 1.0, log_fields=("price", "views", "length"))
    assert c.log_volume == 250.0  # passed through unlogged


# -- OLS --

def test_ols_exact_line():
    x = np.arange(1.0, 11.0)
    X = np.column_stack([np.ones_like(x), x])
    fit = ols(X, 2 * x)
    assert fit.coef == pytest.approx([0.0, 2.0], abs=1e-12)
    assert np.abs(fit.residuals).max() < 1e-12


def test_ols_intercept_only():
    X = np.ones((6, 1))
    fit = ols(X, np.full(6, 3.7))
    assert fit.coef == pytest.approx([3.7])


def test_ols_monte_carlo_recovery_vs_normal_equations():
    rng = np.random.default_rng(7)
    n = 500
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
    b_true = np.array([0.5, -1.2, 2.0, 0.3])
    y = X @ b_true + rng.normal(0, 0.01, n)
    fit = ols(X, y)
    assert np.abs(fit.coef - b_true).max() < 0.01
    # independent oracle: normal equations at extended precision
    Xl, yl = X.astype(np.longdouble), y.astype(np.longdouble)
    oracle = np.linalg.solve((Xl.T @ Xl).astype(float), (Xl.T @ yl).astype(float))
    assert fit.coef == pytest.approx(oracle, abs=1e-9)


def test_ols_rank_and_size_errors():
    x = np.arange(10.0)
    with pytest.raises(RankDeficient):
        ols(np.column_stack([x, 2 * x]), x)
    with pytest.raises(Underdetermined):
        ols(np.ones((3, 3)), np.zeros(3))


# -- FGLS --

def small_records(n=260, seed=1, rho=0.4) -> list[ProductRecord]:
    return generate_products(SynthConfig(n_products=n, seed=seed, rho=rho))


def test_fgls_with_diagonal_sigma_equals_ols():
    records = small_records()
    y1, X1, y2, X2 = build_designs(records)
    fit1, fit2 = ols(X1, y1), ols(X2, y2)
    resid = np.vstack([fit1.residuals, fit2.residuals])
    sigma = (resid @ resid.T) / len(records)
    diag = np.diag(np.diag(sigma))
    est = sur_fgls(records, sigma_override=diag)
    assert np.abs(est.gamma - fit1.coef).max() < 1e-10
    assert np.abs(est.beta - fit2.coef).max() < 1e-10


def test_fgls_underdetermined():
    records = small_records(n=60)[:39]
    with pytest.raises(Underdetermined):
        sur_fgls(records, min_records=1)


def test_fgls_min_records_floor():
    with pytest.raises(Underdetermined):
        sur_fgls(small_records(n=45), min_records=50)


def test_fgls_recovery_smoke():
    # full 20-seed n=5000 run lives in the acceptance suite
    errors, ses = [], []
    for seed in range(3):
        config = SynthConfig(n_products=5000, seed=seed, rho=0.5)
        est = sur_fgls(generate_products(config))
        truth = np.concatenate(
            [[config.gamma0], config.gamma,
             [config.beta0, config.beta1], config.control_betas, config.direct_betas]
        )
        errors.append(np.abs(np.concatenate([est.gamma, est.beta]) - truth).mean())
        ses.append(np.concatenate([est.gamma_se, est.beta_se]).mean())
    assert np.mean(errors) < 2 * np.mean(ses)


def test_fgls_rank_deficient_on_constant_emotions():
    records = [
        ProductRecord(f"p{k}", 3.0 + 0.001 * k, 0.2, 1.0, 1.0, 1.0, 1.0,
                      emotions=(0.0,) * EMOTION_COUNT)
        for k in range(80)
    ]
    with pytest.raises(RankDeficient):
        sur_fgls(records)


def test_fgls_p_values_normal_vs_t():
    records = small_records()
    normal = sur_fgls(records)
    student = sur_fgls(records, use_t=True)
    assert np.array_equal(normal.gamma, student.gamma)
    assert np.all(student.gamma_p >= normal.gamma_p - 1e-12)


# -- indirect effects --

def test_indirect_effect_anchor_values():
    assert indirect_effect(ANGER_GAMMA, BETA1) == pytest.approx(-0.00227, abs=1e-5)
    assert indirect_effect(0.0, 123.0) == 0.0
    assert indirect_effect(DISCONTENT_GAMMA, BETA1) == pytest.approx(-0.003857, abs=1e-5)


def test_delta_se_anchor():
    se = delta_se(ANGER_GAMMA, BETA1, ANGER_GAMMA_SE**2, BETA1_SE**2, 0.0)
    assert se == pytest.approx(0.00068, abs=1e-5)
    assert delta_se(1.0, 1.0, 0.0, 0.0) == 0.0
    assert delta_se(1.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(math.sqrt(2.0))


def test_delta_se_negative_variance():
    with pytest.raises(NegativeVariance):
        delta_se(1.0, 1.0, -0.1, 1.0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1), st.floats(0, 1))
def test_delta_se_sign_flip_invariance(g, b, vg, vb):
    assert delta_se(g, b, vg, vb) == pytest.approx(delta_se(-g, -b, vg, vb))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3))
def test_indirect_effect_bilinear(g, b, scale):
    assert indirect_effect(scale * g, b) == pytest.approx(scale * indirect_effect(g, b))
    assert indirect_effect(g, scale * b) == pytest.approx(scale * indirect_effect(g, b))
    if g and b:
        assert math.copysign(1, indirect_effect(g, b)) == math.copysign(1, g) * math.copysign(1, b)


# -- bootstrap --

def test_bootstrap_deterministic_and_contains_point_estimate():
    records = small_records(n=250, seed=5, rho=0.0)
    a = bootstrap_ci(records, n_boot=120, seed=9)
    b = bootstrap_ci(records, n_boot=120, seed=9)
    assert a.intervals == b.intervals
    est = sur_fgls(records)
    for eid, (lo, hi) in a.intervals.items():
        point = est.gamma_for(eid) * est.beta1
        assert lo <= point <= hi


def test_bootstrap_interval_widens_with_level():
    records = small_records(n=250, seed=6, rho=0.0)
    narrow = bootstrap_ci(records, n_boot=150, seed=4, level=0.80).intervals
    wide = bootstrap_ci(records, n_boot=150, seed=4, level=0.95).intervals
    for eid in narrow:
        assert wide[eid][0] <= narrow[eid][0]
        assert narrow[eid][1] <= wide[eid][1]


def test_bootstrap_anchored_fixture_anger_negative():
    records = generate_products(SynthConfig(seed=2, rho=0.0, n_products=3000))
    result = bootstrap_ci(records, n_boot=150, seed=1)
    lo, hi = result.intervals["anger"]
    assert hi < 0.0  # CI excludes zero with a negative sign


def test_bootstrap_null_simulation_straddles_zero():
    hits = 0
    for s in range(20):
        cfg = null_config(SynthConfig(n_products=600, rho=0.0, seed=100 + s), 0)
        ci = bootstrap_ci(generate_products(cfg), n_boot=150, seed=500 + s).intervals["anger"]
        hits += ci[0] <= 0.0 <= ci[1]
    assert hits >= 18  # >= 90% of 20 seeds


def test_bootstrap_validates_inputs():
    records = small_records(n=100)
    with pytest.raises(ValueError):
        bootstrap_ci(records, n_boot=50)
    with pytest.raises(ValueError):
        bootstrap_ci(records, n_boot=100, level=1.2)


def test_bootstrap_custom_estimator_path():
    records = small_records(n=120, seed=8, rho=0.0)
    fast = bootstrap_ci(records, n_boot=100, seed=3)
    slow = bootstrap_ci(records, estimator=sur_fgls, n_boot=100, seed=3)
    for eid in fast.intervals:
        assert fast.intervals[eid] == pytest.approx(slow.intervals[eid], abs=1e-12)


# -- mediation classification --

def test_classify_mediation_truth_table():
    assert classify_mediation((-0.00385, -0.00102), direct_p=0.51) is MediationClass.FULL
    assert classify_mediation((-0.005, -0.001), direct_p=0.0001) is MediationClass.PARTIAL
    assert classify_mediation((-0.001, 0.002), direct_p=0.01) is MediationClass.NO_MEDIATION
    assert classify_mediation((0.001, 0.002), direct_p=0.2) is MediationClass.FULL


def test_mediation_report_fixture_anchors():
    est = sur_fgls(generate_products(FIXTURE))
    ja = est.gamma_index("anger")
    jd = est.gamma_index("discontent")
    assert est.gamma[ja] == pytest.approx(ANGER_GAMMA, abs=0.05)
    assert est.gamma_se[ja] == pytest.approx(ANGER_GAMMA_SE, abs=0.005)
    assert est.gamma[jd] == pytest.approx(DISCONTENT_GAMMA, abs=0.05)
    assert est.gamma_se[jd] == pytest.approx(DISCONTENT_GAMMA_SE, abs=0.005)
    assert est.beta1 == pytest.approx(BETA1, abs=0.002)
    # generator builds in a negative price effect; the estimate keeps its sign
    assert est.beta[2] < 0


def test_mediation_report_table_layout():
    records = small_records(n=400, seed=4, rho=0.0)
    report = mediation_report(records, n_boot=120, seed=2)
    lines = report.to_csv().splitlines()
    assert lines[0].startswith("term,rating_estimate")
    assert len(lines) == 1 + 6 + EMOTION_COUNT  # header, intercept+5 covariates, emotions
    assert lines[1].split(",")[0] == "intercept"
    assert lines[2].split(",")[0] == "average_rating"
    emotion_rows = lines[7:]
    assert emotion_rows[0].split(",")[0] == "anger"
    classes = {row.split(",")[-1] for row in emotion_rows}
    assert classes <= {c.value for c in MediationClass}

    summary = report.to_json_summary()
    assert '"emotion": "anger"' in summary


def test_product_record_validation():
    with pytest.raises(ValueError):
        ProductRecord("p", 6.0, 0.1, 0, 0, 0, 0, (0.0,) * EMOTION_COUNT)
    with pytest.raises(ValueError):
        ProductRecord("p", 4.0, 1.5, 0, 0, 0, 0, (0.0,) * EMOTION_COUNT)
    with pytest.raises(ValueError):
        ProductRecord("p", 4.0, 0.5, 0, 0, 0, 0, (1.2,) + (0.0,) * (EMOTION_COUNT - 1))


def test_product_csv_roundtrip():
    records = small_records(n=60)
    restored = read_product_csv(write_product_csv(records))
    assert len(restored) == 60
    for a, b in zip(records, restored):
        assert a.product_id == b.product_id
        assert a.average_rating == pytest.approx(b.average_rating, abs=1e-9)
        assert a.emotions == pytest.approx(b.emotions, abs=1e-9)


def test_generator_deterministic_and_truths():
    a = generate_products(SynthConfig(n_products=50, seed=12))
    b = generate_products(SynthConfig(n_products=50, seed=12))
    assert a == b
    truths = true_indirect_effects(SynthConfig())
    assert truths["anger"] == pytest.approx(ANGER_GAMMA * BETA1, abs=1e-9)
