"""Scoring observed count traces against model predictions."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Mapping

import numpy as np

MIN_USABLE_BINS = 8
POOR_FIT_R2 = 0.5


class UnderdeterminedError(ValueError):
    """Too few usable bins for a comparison."""


class GridMismatchError(ValueError):
    pass


@dataclass
class EnvelopeFit:
    """Exponential fit to the rectified oscillation peaks of a series."""

    rate: float
    log_amplitude0: float
    r2: float
    peak_times: np.ndarray = field(repr=False)
    peak_values: np.ndarray = field(repr=False)

    def amplitude(self, t) -> np.ndarray:
        return np.exp(self.log_amplitude0 - self.rate * np.asarray(t, dtype=float))

    @property
    def poor(self) -> bool:
        return not np.isfinite(self.r2) or self.r2 < POOR_FIT_R2


def envelope_fit(t, y, detrend_degree: int = 1) -> EnvelopeFit:
    """Fit A exp(-rate t) to the oscillation envelope of ``y``.

    A polynomial trend of ``detrend_degree`` is removed, the residual is rectified,
    and log of its interior local maxima is fitted by least squares against time.
    Fewer than two peaks gives a NaN rate.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y)
    t, y = t[ok], y[ok]
    nan = EnvelopeFit(np.nan, np.nan, np.nan, np.array([]), np.array([]))
    if len(y) < max(3, detrend_degree + 2):
        return nan
    coef = np.polyfit(t, y, detrend_degree)
    resid = np.abs(y - np.polyval(coef, t))
    inner = np.arange(1, len(resid) - 1)
    is_peak = (resid[inner] >= resid[inner - 1]) & (resid[inner] > resid[inner + 1]) & (resid[inner] > 0)
    idx = inner[is_peak]
    if len(idx) < 2:
        return nan
    pt, pv = t[idx], resid[idx]
    logv = np.log(pv)
    slope, intercept = np.polyfit(pt, logv, 1)
    fitted = intercept + slope * pt
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return EnvelopeFit(float(-slope), float(intercept), r2, pt, pv)


@dataclass
class ModelScore:
    model: str
    chi2: float
    dof: int
    envelope_rate_per_kS: float
    preferred: bool = False


@dataclass
class ComparisonReport:
    scores: list[ModelScore]
    preferred: str
    bins_used: int
    observed_envelope_rate_per_kS: float
    observed_envelope_r2: float
    poor_envelope_fit: bool

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["models"] = d.pop("scores")
        return _finite_or_none(d)

    def to_text(self) -> str:
        lines = [f"bins used: {self.bins_used}"]
        for s in self.scores:
            mark = "  <- preferred" if s.preferred else ""
            lines.append(
                f"{s.model:>10}: chi2 = {s.chi2:.6g} (dof {s.dof}), "
                f"envelope rate = {s.envelope_rate_per_kS:.4g} k_S{mark}"
            )
        lines.append(
            f"observed envelope rate = {self.observed_envelope_rate_per_kS:.4g} k_S "
            f"(R^2 = {self.observed_envelope_r2:.3f}{', poor fit' if self.poor_envelope_fit else ''})"
        )
        lines.append(f"preferred model: {self.preferred}")
        return "\n".join(lines)


def _finite_or_none(obj):
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def compare_counts(
    starts: np.ndarray,
    predicted: Mapping[str, np.ndarray],
    observed_starts: np.ndarray,
    observed: np.ndarray,
    k_S: float = 1.0,
) -> ComparisonReport:
    """Score an observed count trace against each model's expected counts.

    Each model's expectation is first rescaled by c = sum(n)/sum(N), absorbing an
    unknown ensemble size or detection efficiency (one fitted parameter). The
    statistic is chi2 = sum_k ((dn_obs - dn_pred) / sigma_exact)^2 over delta-n
    bins, with dn and sigma normalized by the rescaled model counts.
    """
    starts = np.asarray(starts, dtype=float)
    observed_starts = np.asarray(observed_starts, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if len(starts) != len(observed_starts) or not np.allclose(starts, observed_starts, rtol=0, atol=1e-9):
        raise GridMismatchError("observed bin grid does not match the predicted grid")
    if np.any(observed < 0):
        raise ValueError("observed counts must be non-negative")

    scores = []
    usable_counts = []
    for name, N in predicted.items():
        N = np.asarray(N, dtype=float)
        total = N.sum()
        c = observed.sum() / total if total > 0 else 1.0
        Nc = c * N
        usable = (Nc[:-1] > 0) & (Nc[:-1] + Nc[1:] > 0)
        n_use = int(usable.sum())
        usable_counts.append(n_use)
        if n_use < MIN_USABLE_BINS:
            raise UnderdeterminedError(f"only {n_use} usable bins for model {name!r} (need {MIN_USABLE_BINS})")
        Nk, Nn = Nc[:-1][usable], Nc[1:][usable]
        nk, nn = observed[:-1][usable], observed[1:][usable]
        dn_obs = (nn - nk) / Nk
        dn_pred = (Nn - Nk) / Nk
        sigma = np.sqrt(Nk + Nn) / Nk
        chi2 = float(np.sum(((dn_obs - dn_pred) / sigma) ** 2))
        dn_model = -(N[1:] - N[:-1]) / np.where(N[:-1] > 0, N[:-1], np.nan)
        env = envelope_fit(starts[:-1] * k_S, dn_model)
        scores.append(ModelScore(name, chi2, n_use - 1, env.rate))

    best = min(range(len(scores)), key=lambda i: scores[i].chi2)
    scores[best].preferred = True

    with np.errstate(divide="ignore", invalid="ignore"):
        dn_obs_fig = -(observed[1:] - observed[:-1]) / np.where(observed[:-1] > 0, observed[:-1], np.nan)
    obs_env = envelope_fit(starts[:-1] * k_S, dn_obs_fig)
    return ComparisonReport(
        scores=scores,
        preferred=scores[best].model,
        bins_used=min(usable_counts),
        observed_envelope_rate_per_kS=obs_env.rate,
        observed_envelope_r2=obs_env.r2,
        poor_envelope_fit=obs_env.poor,
    )
