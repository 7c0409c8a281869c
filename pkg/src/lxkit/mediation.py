"""Two-equation rating/purchase system with mediation inference.

Equation 1 regresses a product's average review rating on its 16 emotion
proportions; equation 2 regresses purchase rate on the rating, four logged
controls, and the same emotions. The system is estimated by two-step feasible
GLS: per-equation OLS, residual cross-moment covariance, then a stacked GLS
solve weighted blockwise by the inverse residual covariance. Indirect effects
are coefficient products with delta-method standard errors and percentile
bootstrap intervals.

The estimator note: the rating response also appears as a purchase-equation
regressor, so with a nonzero residual correlation the rating coefficient in
equation 2 absorbs that correlation; this is an estimation caveat of the
prescribed approach, not of this implementation.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import (
    BootstrapError,
    NegativeVariance,
    NonPositiveControl,
    RankDeficient,
    SingularSigma,
    Underdetermined,
)
from .taxonomy import Taxonomy, default_taxonomy

EMOTION_COUNT = 16
CONTROL_NAMES = ("log_price", "log_volume", "log_views", "log_length")


@dataclass(frozen=True)
class ProductRecord:
    product_id: str
    average_rating: float
    purchase_rate: float
    log_price: float
    log_volume: float
    log_views: float
    log_length: float
    emotions: tuple[float, ...]  # 16 proportions, taxonomy emotion order

    def __post_init__(self):
        if len(self.emotions) != EMOTION_COUNT:
            raise ValueError(f"expected {EMOTION_COUNT} emotion proportions")
        if not all(0.0 <= e <= 1.0 for e in self.emotions):
            raise ValueError("emotion proportions must lie in [0, 1]")
        if not 0.0 <= self.purchase_rate <= 1.0:
            raise ValueError("purchase_rate must lie in [0, 1]")
        if not 1.0 <= self.average_rating <= 5.0:
            raise ValueError("average_rating must lie in [1, 5]")


@dataclass(frozen=True)
class Review:
    product_id: str
    rating: float
    emotion_flags: tuple[int, ...]  # 16 presence dummies
    word_count: int


@dataclass(frozen=True)
class ReviewAggregate:
    """Product-level features derived from its reviews; controls are joined
    separately via prepare_controls."""

    product_id: str
    average_rating: float
    emotions: tuple[float, ...]
    mean_word_count: float
    review_count: int


def aggregate_reviews(
    reviews: Sequence[Review], product_ids: Optional[Sequence[str]] = None
) -> list[ReviewAggregate]:
    """Mean rating, per-emotion presence fractions, and mean review length
    per product. Products in `product_ids` without any review are skipped
    with a warning."""
    grouped: dict[str, list[Review]] = {}
    for r in reviews:
        if len(r.emotion_flags) != EMOTION_COUNT:
            raise ValueError(f"expected {EMOTION_COUNT} emotion flags")
        grouped.setdefault(r.product_id, []).append(r)

    wanted = list(product_ids) if product_ids is not None else sorted(grouped)
    out = []
    for pid in wanted:
        batch = grouped.get(pid)
        if not batch:
            warnings.warn(f"product {pid!r} has no reviews; skipped")
            continue
        flags = np.array([r.emotion_flags for r in batch], dtype=float)
        out.append(
            ReviewAggregate(
                product_id=pid,
                average_rating=float(np.mean([r.rating for r in batch])),
                emotions=tuple(flags.mean(axis=0)),
                mean_word_count=float(np.mean([r.word_count for r in batch])),
                review_count=len(batch),
            )
        )
    return out


@dataclass(frozen=True)
class Controls:
    log_price: float
    log_volume: float
    log_views: float
    log_length: float


def prepare_controls(
    price: float,
    volume: float,
    views: float,
    mean_length: float,
    log_fields: Iterable[str] = ("price", "volume", "views", "length"),
) -> Controls:
    """Natural-log transform of the four controls; fields left out of
    `log_fields` pass through unlogged."""
    values = {"price": price, "volume": volume, "views": views, "length": mean_length}
    logged = {}
    log_set = set(log_fields)
    for name, value in values.items():
        if name in log_set:
            if value <= 0:
                raise NonPositiveControl(f"{name} must be positive to take logs, got {value}")
            logged[name] = math.log(value)
        else:
            logged[name] = float(value)
    return Controls(logged["price"], logged["volume"], logged["views"], logged["length"])


# -- OLS -------------------------------------------------------------------------

@dataclass(frozen=True)
class OlsResult:
    coef: np.ndarray
    residuals: np.ndarray
    cov: np.ndarray


def ols(X: np.ndarray, y: np.ndarray) -> OlsResult:
    """Least squares via QR with an explicit rank check."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise Underdetermined(f"{n} rows for {p} columns")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= max(n, p) * np.finfo(float).eps * diag.max():
        raise RankDeficient("design matrix is rank deficient")
    coef = np.linalg.solve(R, Q.T @ y)
    residuals = y - X @ coef
    sigma2 = float(residuals @ residuals) / (n - p)
    Rinv = np.linalg.solve(R, np.eye(p))
    cov = sigma2 * (Rinv @ Rinv.T)
    return OlsResult(coef=coef, residuals=residuals, cov=cov)


# -- two-equation FGLS -------------------------------------------------------------

@dataclass(frozen=True)
class SurEstimate:
    gamma: np.ndarray          # intercept + 16 emotion coefficients (rating eq)
    beta: np.ndarray           # intercept, rating, 4 controls, 16 emotions (purchase eq)
    gamma_se: np.ndarray
    beta_se: np.ndarray
    gamma_t: np.ndarray
    beta_t: np.ndarray
    gamma_p: np.ndarray
    beta_p: np.ndarray
    joint_cov: np.ndarray      # 39 x 39, gamma block then beta block
    sigma: np.ndarray          # 2 x 2 residual covariance
    n: int
    emotion_ids: tuple[str, ...]

    GAMMA_DIM = 1 + EMOTION_COUNT
    BETA_DIM = 2 + len(CONTROL_NAMES) + EMOTION_COUNT

    def gamma_index(self, emotion_id: str) -> int:
        return 1 + self.emotion_ids.index(emotion_id)

    def direct_index(self, emotion_id: str) -> int:
        return 2 + len(CONTROL_NAMES) + self.emotion_ids.index(emotion_id)

    @property
    def beta1(self) -> float:
        return float(self.beta[1])

    def gamma_for(self, emotion_id: str) -> float:
        return float(self.gamma[self.gamma_index(emotion_id)])

    def direct_for(self, emotion_id: str) -> float:
        return float(self.beta[self.direct_index(emotion_id)])

    def direct_p_for(self, emotion_id: str) -> float:
        return float(self.beta_p[self.direct_index(emotion_id)])

    def indirect_covariance(self, emotion_id: str) -> tuple[float, float, float]:
        """(var of the emotion's rating coefficient, var of the rating->purchase
        coefficient, their cross-equation covariance)."""
        gi = self.gamma_index(emotion_id)
        bi = self.GAMMA_DIM + 1
        return (
            float(self.joint_cov[gi, gi]),
            float(self.joint_cov[bi, bi]),
            float(self.joint_cov[gi, bi]),
        )


def build_designs(
    records: Sequence[ProductRecord],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(rating response, rating design, purchase response, purchase design)."""
    n = len(records)
    E = np.array([r.emotions for r in records], dtype=float)
    rating = np.array([r.average_rating for r in records], dtype=float)
    purchase = np.array([r.purchase_rate for r in records], dtype=float)
    controls = np.array(
        [[r.log_price, r.log_volume, r.log_views, r.log_length] for r in records],
        dtype=float,
    )
    ones = np.ones((n, 1))
    X1 = np.hstack([ones, E])
    X2 = np.hstack([ones, rating[:, None], controls, E])
    return rating, X1, purchase, X2


def _p_values(t_stats: np.ndarray, df: Optional[int]) -> np.ndarray:
    if df is None:
        return 2.0 * stats.norm.sf(np.abs(t_stats))
    return 2.0 * stats.t.sf(np.abs(t_stats), df)


def _fgls_arrays(
    y1: np.ndarray,
    X1: np.ndarray,
    y2: np.ndarray,
    X2: np.ndarray,
    sigma_override: Optional[np.ndarray] = None,
    use_t: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Core two-step fit on prebuilt arrays.

    Returns (stacked coefficients, joint covariance, residual covariance).
    The GLS normal equations are assembled blockwise from the 2x2 inverse
    residual covariance, avoiding the kron product.
    """
    n = y1.shape[0]
    fit1 = ols(X1, y1)
    fit2 = ols(X2, y2)
    if sigma_override is not None:
        sigma = np.asarray(sigma_override, dtype=float)
    else:
        resid = np.vstack([fit1.residuals, fit2.residuals])
        sigma = (resid @ resid.T) / n
    det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
    if not np.isfinite(det) or abs(det) <= 1e-300 or sigma[0, 0] <= 0 or sigma[1, 1] <= 0:
        raise SingularSigma("residual covariance is not invertible")
    si = np.array([[sigma[1, 1], -sigma[0, 1]], [-sigma[1, 0], sigma[0, 0]]]) / det

    p1, p2 = X1.shape[1], X2.shape[1]
    normal = np.empty((p1 + p2, p1 + p2))
    normal[:p1, :p1] = si[0, 0] * (X1.T @ X1)
    normal[:p1, p1:] = si[0, 1] * (X1.T @ X2)
    normal[p1:, :p1] = si[1, 0] * (X2.T @ X1)
    normal[p1:, p1:] = si[1, 1] * (X2.T @ X2)
    rhs = np.concatenate(
        [
            si[0, 0] * (X1.T @ y1) + si[0, 1] * (X1.T @ y2),
            si[1, 0] * (X2.T @ y1) + si[1, 1] * (X2.T @ y2),
        ]
    )
    try:
        joint_cov = np.linalg.inv(normal)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("stacked GLS normal matrix is singular") from exc
    coef = joint_cov @ rhs
    return coef, joint_cov, sigma


def sur_fgls(
    records: Sequence[ProductRecord],
    min_records: int = 50,
    sigma_override: Optional[np.ndarray] = None,
    use_t: bool = False,
    taxonomy: Optional[Taxonomy] = None,
) -> SurEstimate:
    """Two-step feasible GLS over the rating and purchase equations."""
    n = len(records)
    p_total = SurEstimate.GAMMA_DIM + SurEstimate.BETA_DIM
    if n < max(min_records, p_total + 1):
        raise Underdetermined(
            f"{n} records; need at least {max(min_records, p_total + 1)}"
        )
    y1, X1, y2, X2 = build_designs(records)
    coef, joint_cov, sigma = _fgls_arrays(y1, X1, y2, X2, sigma_override)
    se = np.sqrt(np.diag(joint_cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(se > 0, coef / se, 0.0)
    df = (2 * n - p_total) if use_t else None
    p_vals = _p_values(t_stats, df)

    p1 = SurEstimate.GAMMA_DIM
    tax = taxonomy or default_taxonomy()
    return SurEstimate(
        gamma=coef[:p1],
        beta=coef[p1:],
        gamma_se=se[:p1],
        beta_se=se[p1:],
        gamma_t=t_stats[:p1],
        beta_t=t_stats[p1:],
        gamma_p=p_vals[:p1],
        beta_p=p_vals[p1:],
        joint_cov=joint_cov,
        sigma=sigma,
        n=n,
        emotion_ids=tax.emotion_ids(),
    )


# -- indirect effects ---------------------------------------------------------------

def indirect_effect(gamma_1j: float, beta_1: float) -> float:
    """Mediated path coefficient product."""
    return gamma_1j * beta_1


def delta_se(
    gamma_1j: float,
    beta_1: float,
    var_gamma: float,
    var_beta: float,
    cov_gb: float = 0.0,
) -> float:
    """First-order delta-method standard error of the coefficient product."""
    if var_gamma < 0 or var_beta < 0:
        raise NegativeVariance("variances must be non-negative")
    radicand = beta_1**2 * var_gamma + gamma_1j**2 * var_beta + 2 * gamma_1j * beta_1 * cov_gb
    if radicand < 0:
        if radicand < -1e-15:
            raise NegativeVariance(f"delta-method radicand is negative: {radicand}")
        radicand = 0.0
    return math.sqrt(radicand)


@dataclass(frozen=True)
class BootstrapResult:
    intervals: dict[str, tuple[float, float]]
    n_boot: int
    n_discarded: int


def bootstrap_ci(
    records: Sequence[ProductRecord],
    estimator: Optional[Callable[[Sequence[ProductRecord]], SurEstimate]] = None,
    n_boot: int = 1000,
    seed: int = 0,
    level: float = 0.95,
    max_discard_fraction: float = 0.05,
) -> BootstrapResult:
    """Percentile intervals for every emotion's indirect effect.

    Products (rows) are resampled with replacement; each replicate draws its
    RNG stream from (seed, replicate index) so results do not depend on
    evaluation order. Replicates whose fit fails are discarded and counted;
    more than `max_discard_fraction` failures aborts.
    """
    if n_boot < 100:
        raise ValueError("n_boot must be at least 100")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    n = len(records)
    emotion_ids = default_taxonomy().emotion_ids()
    values = np.empty((n_boot, EMOTION_COUNT))
    kept = 0
    discarded = 0

    fast = estimator is None
    if fast:
        y1, X1, y2, X2 = build_designs(records)
    for b in range(n_boot):
        rng = np.random.default_rng([seed, b])
        idx = rng.integers(0, n, size=n)
        try:
            if fast:
                coef, _, _ = _fgls_arrays(y1[idx], X1[idx], y2[idx], X2[idx])
                gammas = coef[1:1 + EMOTION_COUNT]
                beta1 = coef[SurEstimate.GAMMA_DIM + 1]
            else:
                est = estimator([records[i] for i in idx])
                gammas = est.gamma[1:]
                beta1 = est.beta1
        except (RankDeficient, Underdetermined, SingularSigma, np.linalg.LinAlgError):
            discarded += 1
            continue
        values[kept] = gammas * beta1
        kept += 1

    if discarded > max_discard_fraction * n_boot:
        raise BootstrapError(f"{discarded}/{n_boot} bootstrap replicates failed")
    tail = (1.0 - level) / 2.0
    lo = np.quantile(values[:kept], tail, axis=0)
    hi = np.quantile(values[:kept], 1.0 - tail, axis=0)
    intervals = {
        eid: (float(lo[j]), float(hi[j])) for j, eid in enumerate(emotion_ids)
    }
    return BootstrapResult(intervals=intervals, n_boot=n_boot, n_discarded=discarded)


class MediationClass(str, Enum):
    FULL = "full"
    PARTIAL = "partial"
    NO_MEDIATION = "no_mediation"


def classify_mediation(
    indirect_ci: tuple[float, float], direct_p: float, alpha: float = 0.05
) -> MediationClass:
    lo, hi = indirect_ci
    excludes_zero = lo > 0.0 or hi < 0.0
    if not excludes_zero:
        return MediationClass.NO_MEDIATION
    return MediationClass.FULL if direct_p >= alpha else MediationClass.PARTIAL


@dataclass(frozen=True)
class MediationResult:
    emotion_id: str
    indirect: float
    indirect_se: float
    indirect_ci: tuple[float, float]
    direct: float
    direct_p: float
    classification: MediationClass


@dataclass(frozen=True)
class MediationReport:
    estimate: SurEstimate
    results: tuple[MediationResult, ...]
    bootstrap: BootstrapResult

    def to_csv(self) -> str:
        """Long-form table: covariate rows for the purchase equation, then
        one row per emotion with both equations plus mediation columns."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "term",
                "rating_estimate", "rating_se", "rating_t", "rating_p",
                "purchase_estimate", "purchase_se", "purchase_t", "purchase_p",
                "indirect", "indirect_se", "ci_lo", "ci_hi", "classification",
            ]
        )
        est = self.estimate

        def fmt(x) -> str:
            return "" if x is None else f"{x:.6g}"

        covariates = [
            ("average_rating", 1),
            ("log_price", 2),
            ("log_volume", 3),
            ("log_views", 4),
            ("log_length", 5),
        ]
        writer.writerow(
            ["intercept",
             fmt(est.gamma[0]), fmt(est.gamma_se[0]), fmt(est.gamma_t[0]), fmt(est.gamma_p[0]),
             fmt(est.beta[0]), fmt(est.beta_se[0]), fmt(est.beta_t[0]), fmt(est.beta_p[0]),
             "", "", "", "", ""]
        )
        for name, bi in covariates:
            writer.writerow(
                [name, "", "", "", "",
                 fmt(est.beta[bi]), fmt(est.beta_se[bi]), fmt(est.beta_t[bi]), fmt(est.beta_p[bi]),
                 "", "", "", "", ""]
            )
        by_emotion = {r.emotion_id: r for r in self.results}
        for j, eid in enumerate(est.emotion_ids):
            gi, bi = 1 + j, est.direct_index(eid)
            r = by_emotion[eid]
            writer.writerow(
                [eid,
                 fmt(est.gamma[gi]), fmt(est.gamma_se[gi]), fmt(est.gamma_t[gi]), fmt(est.gamma_p[gi]),
                 fmt(est.beta[bi]), fmt(est.beta_se[bi]), fmt(est.beta_t[bi]), fmt(est.beta_p[bi]),
                 fmt(r.indirect), fmt(r.indirect_se), fmt(r.indirect_ci[0]), fmt(r.indirect_ci[1]),
                 r.classification.value]
            )
        return buf.getvalue()

    def to_json_summary(self) -> str:
        return json.dumps(
            [
                {
                    "emotion": r.emotion_id,
                    "indirect": r.indirect,
                    "se": r.indirect_se,
                    "ci_lo": r.indirect_ci[0],
                    "ci_hi": r.indirect_ci[1],
                    "direct": r.direct,
                    "direct_p": r.direct_p,
                    "classification": r.classification.value,
                }
                for r in self.results
            ],
            indent=2,
        )


def mediation_report(
    records: Sequence[ProductRecord],
    n_boot: int = 1000,
    seed: int = 0,
    level: float = 0.95,
    alpha: float = 0.05,
    use_t: bool = False,
) -> MediationReport:
    """Fit the system, bootstrap the indirect effects, and classify mediation
    per emotion."""
    estimate = sur_fgls(records, use_t=use_t)
    boot = bootstrap_ci(records, n_boot=n_boot, seed=seed, level=level)
    results = []
    for eid in estimate.emotion_ids:
        g = estimate.gamma_for(eid)
        b = estimate.beta1
        var_g, var_b, cov_gb = estimate.indirect_covariance(eid)
        ci = boot.intervals[eid]
        direct_p = estimate.direct_p_for(eid)
        results.append(
            MediationResult(
                emotion_id=eid,
                indirect=indirect_effect(g, b),
                indirect_se=delta_se(g, b, var_g, var_b, cov_gb),
                indirect_ci=ci,
                direct=estimate.direct_for(eid),
                direct_p=direct_p,
                classification=classify_mediation(ci, direct_p, alpha),
            )
        )
    return MediationReport(estimate=estimate, results=tuple(results), bootstrap=boot)


# -- product-record CSV I/O -----------------------------------------------------------

def product_csv_header(taxonomy: Optional[Taxonomy] = None) -> list[str]:
    tax = taxonomy or default_taxonomy()
    return [
        "product_id", "average_rating", "purchase_rate",
        "log_price", "log_volume", "log_views", "log_length",
        *tax.emotion_ids(),
    ]


def write_product_csv(records: Sequence[ProductRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = product_csv_header()
    writer.writerow(header)
    for r in records:
        writer.writerow(
            [r.product_id, f"{r.average_rating:.10g}", f"{r.purchase_rate:.10g}",
             f"{r.log_price:.10g}", f"{r.log_volume:.10g}", f"{r.log_views:.10g}",
             f"{r.log_length:.10g}",
             *(f"{e:.10g}" for e in r.emotions)]
        )
    return buf.getvalue()


def read_product_csv(text: str) -> list[ProductRecord]:
    reader = csv.DictReader(io.StringIO(text))
    emotion_ids = default_taxonomy().emotion_ids()
    records = []
    for row in reader:
        records.append(
            ProductRecord(
                product_id=row["product_id"],
                average_rating=float(row["average_rating"]),
                purchase_rate=float(row["purchase_rate"]),
                log_price=float(row["log_price"]),
                log_volume=float(row["log_volume"]),
                log_views=float(row["log_views"]),
                log_length=float(row["log_length"]),
                emotions=tuple(float(row[eid]) for eid in emotion_ids),
            )
        )
    return records
