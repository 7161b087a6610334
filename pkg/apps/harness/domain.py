"""Report types produced by the measurement campaigns."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional


def _finite_or_none(values):
    # runs that never reach the gap carry inf, which JSON cannot hold
    return [None if math.isinf(v) else v for v in values]


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line through (ln x, ln y)."""

    slope: float
    intercept: float
    stderr: float
    n_points: int

    def as_dict(self):
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'stderr': self.stderr,
            'n_points': self.n_points,
        }


@dataclass(frozen=True)
class BiasVarianceRow:
    """Bias and second moment of the gradient estimator at one batch size."""

    B: int
    bias_norm: float
    variance: float
    mse_J: Optional[float]
    replications: int
    ci_halfwidth: float
    excluded_from_fit: bool = False

    def as_dict(self):
        return {
            'B': self.B,
            'bias_norm': self.bias_norm,
            'variance': self.variance,
            'mse_J': self.mse_J,
            'replications': self.replications,
            'ci_halfwidth': self.ci_halfwidth,
            'excluded_from_fit': self.excluded_from_fit,
        }


@dataclass(frozen=True)
class BiasVarianceReport:
    """
    One bias/variance campaign.

    Bias is measured against the truncated-horizon gradient; the
    ``horizon_bias`` field reports ||grad f(J) - grad f(J_H)|| separately.
    """

    rows: tuple
    estimator_kind: str
    scalarization_kind: str
    mode: str
    horizon: int
    horizon_bias: float
    horizon_bias_bound: float
    fitted_slope_bias: Optional[SlopeFit] = None
    fitted_slope_variance: Optional[SlopeFit] = None

    def as_dict(self):
        return {
            'estimator_kind': self.estimator_kind,
            'scalarization_kind': self.scalarization_kind,
            'mode': self.mode,
            'horizon': self.horizon,
            'horizon_bias': self.horizon_bias,
            'horizon_bias_bound': self.horizon_bias_bound,
            'rows': [row.as_dict() for row in self.rows],
            'fitted_slope_bias': (
                None if self.fitted_slope_bias is None
                else self.fitted_slope_bias.as_dict()
            ),
            'fitted_slope_variance': (
                None if self.fitted_slope_variance is None
                else self.fitted_slope_variance.as_dict()
            ),
        }


CAMPAIGN_CSV_COLUMNS = [
    'B', 'bias_norm', 'variance', 'mse_J', 'replications', 'ci_halfwidth',
    'excluded_from_fit',
]


@dataclass(frozen=True)
class InnerLoopDiagnostics:
    """Measured inner-loop error conditions against oracle values."""

    sigma_F_sq: float
    sigma_F_sq_ci: float
    delta_F: float
    delta_F_ci: float
    lambda_F: float
    lambda_g: float
    R_0: float
    fisher_bias_bound: float
    fisher_variance_bound: float
    grad_norm: float
    batch_size: int
    replications: int

    def as_dict(self):
        return {
            'sigma_F_sq': self.sigma_F_sq,
            'sigma_F_sq_ci': self.sigma_F_sq_ci,
            'delta_F': self.delta_F,
            'delta_F_ci': self.delta_F_ci,
            'lambda_F': self.lambda_F,
            'lambda_g': self.lambda_g,
            'R_0': self.R_0,
            'fisher_bias_bound': self.fisher_bias_bound,
            'fisher_variance_bound': self.fisher_variance_bound,
            'grad_norm': self.grad_norm,
            'batch_size': self.batch_size,
            'replications': self.replications,
        }


@dataclass(frozen=True)
class BudgetComparison:
    """Median trajectories to reach a gap, vanilla against MLMC."""

    epsilon: float
    gap: float
    vanilla_budget: Optional[float]
    mlmc_budget: Optional[float]
    vanilla_budgets: tuple = field(default_factory=tuple)
    mlmc_budgets: tuple = field(default_factory=tuple)

    @property
    def ratio(self):
        if not self.vanilla_budget or not self.mlmc_budget:
            return None
        return self.vanilla_budget / self.mlmc_budget

    def as_dict(self):
        return {
            'epsilon': self.epsilon,
            'gap': self.gap,
            'vanilla_budget': self.vanilla_budget,
            'mlmc_budget': self.mlmc_budget,
            'ratio': self.ratio,
            'vanilla_budgets': _finite_or_none(self.vanilla_budgets),
            'mlmc_budgets': _finite_or_none(self.mlmc_budgets),
        }
