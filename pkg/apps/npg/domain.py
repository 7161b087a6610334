"""Configuration and report types for the NPG outer loops."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from apps.core.exceptions import ConfigurationError


@dataclass(frozen=True)
class EmpiricalEstimator:
    """Batch plug-in partials from B1 trajectories, B2 per inner step."""

    batch_j: int
    batch_inner: int
    kind = 'empirical'

    def validate(self):
        if self.batch_j < 1 or self.batch_inner < 1:
            raise ConfigurationError('B1 and B2 must be >= 1')

    def as_dict(self):
        return {'kind': self.kind, 'B1': self.batch_j, 'B2': self.batch_inner}


@dataclass(frozen=True)
class MlmcEstimator:
    """MLMC partials truncated at B_max, B trajectories per inner step."""

    b_max: int
    batch_inner: int
    coupled_base: bool = True
    kind = 'mlmc'

    def validate(self):
        if self.b_max < 1 or self.batch_inner < 1:
            raise ConfigurationError('B_max and B must be >= 1')

    @property
    def effective_b_max(self):
        return 2 ** (int(self.b_max).bit_length() - 1)

    def as_dict(self):
        return {
            'kind': self.kind,
            'B_max': self.b_max,
            'effective_b_max': self.effective_b_max,
            'B': self.batch_inner,
            'coupled_base': self.coupled_base,
        }


@dataclass(frozen=True)
class OracleEstimator:
    """Exact gradient and Fisher; no trajectories are sampled."""

    kind = 'oracle'

    def validate(self):
        pass

    def as_dict(self):
        return {'kind': self.kind}


@dataclass(frozen=True, eq=False)
class NpgConfig:
    """Inputs of one NPG run."""

    outer_iters: int
    inner_iters: int
    horizon: int
    step_alpha: float
    estimator: object
    step_beta: Optional[float] = None
    master_seed: int = 0
    omega_init: Optional[np.ndarray] = None
    fisher_normalized: bool = True
    theta_init: Optional[np.ndarray] = None
    warm_start: bool = False
    refresh_mu: bool = False
    k_constant: float = 1.0
    alpha_clamped: bool = False

    def __post_init__(self):
        if self.outer_iters < 0:
            raise ConfigurationError('outer_iters must be >= 0')
        if self.inner_iters < 1:
            raise ConfigurationError('inner_iters must be >= 1')
        if self.horizon < 1:
            raise ConfigurationError('horizon must be >= 1')
        if not self.step_alpha > 0:
            raise ConfigurationError('step_alpha must be positive')
        if self.step_beta is not None and not self.step_beta > 0:
            raise ConfigurationError('step_beta must be positive')
        self.estimator.validate()
        for name in ('omega_init', 'theta_init'):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(
                    self, name, np.asarray(value, dtype=float).reshape(-1)
                )

    def with_beta(self, step_beta):
        return replace(self, step_beta=step_beta)

    def as_dict(self):
        return {
            'outer_iters': self.outer_iters,
            'inner_iters': self.inner_iters,
            'horizon': self.horizon,
            'step_alpha': self.step_alpha,
            'step_beta': self.step_beta,
            'estimator': self.estimator.as_dict(),
            'master_seed': self.master_seed,
            'omega_init': (
                None if self.omega_init is None else self.omega_init.tolist()
            ),
            'fisher_normalized': self.fisher_normalized,
            'theta_init': (
                None if self.theta_init is None else self.theta_init.tolist()
            ),
            'warm_start': self.warm_start,
            'refresh_mu': self.refresh_mu,
            'k_constant': self.k_constant,
            'alpha_clamped': self.alpha_clamped,
        }


@dataclass(frozen=True)
class IterationRecord:
    """Exact diagnostics after outer update k."""

    k: int
    exact_f: float
    exact_J: tuple
    trajectories_this_iter: int
    omega_norm: float
    grad_norm_exact: float
    level_q: Optional[int] = None
    truncated: Optional[bool] = None
    gap_to_ref: Optional[float] = None

    def as_dict(self):
        record = {
            'k': self.k,
            'exact_f': self.exact_f,
            'exact_J': list(self.exact_J),
            'trajectories_this_iter': self.trajectories_this_iter,
            'omega_norm': self.omega_norm,
            'grad_norm_exact': self.grad_norm_exact,
        }
        if self.level_q is not None:
            record['level_q'] = self.level_q
            record['truncated'] = self.truncated
        if self.gap_to_ref is not None:
            record['gap_to_ref'] = self.gap_to_ref
        return record


CSV_COLUMNS = [
    'k', 'exact_f', 'gap_to_ref', 'trajectories_cum', 'env_steps_cum',
    'omega_norm', 'level_q',
]


@dataclass(frozen=True, eq=False)
class RunReport:
    """Per-iteration records and trajectory totals of one run."""

    algorithm: str
    config: NpgConfig
    iterations: tuple = field(default_factory=tuple)
    theta_final: Optional[np.ndarray] = None
    f_star: Optional[float] = None

    @property
    def total_trajectories(self):
        return sum(r.trajectories_this_iter for r in self.iterations)

    @property
    def total_env_steps(self):
        return self.total_trajectories * self.config.horizon

    def with_reference(self, f_star):
        """Copy of the report with gap_to_ref = f_star - exact_f filled in."""
        iterations = tuple(
            replace(r, gap_to_ref=float(f_star) - r.exact_f)
            for r in self.iterations
        )
        return replace(self, iterations=iterations, f_star=float(f_star))

    def as_dict(self):
        return {
            'algorithm': self.algorithm,
            'config_echo': self.config.as_dict(),
            'iterations': [r.as_dict() for r in self.iterations],
            'total_trajectories': self.total_trajectories,
            'total_env_steps': self.total_env_steps,
            'theta_final': (
                None if self.theta_final is None
                else self.theta_final.tolist()
            ),
            'f_star': self.f_star,
        }

    def csv_rows(self):
        rows = []
        cumulative = 0
        for record in self.iterations:
            cumulative += record.trajectories_this_iter
            rows.append([
                record.k,
                repr(record.exact_f),
                '' if record.gap_to_ref is None else repr(record.gap_to_ref),
                cumulative,
                cumulative * self.config.horizon,
                repr(record.omega_norm),
                '' if record.level_q is None else record.level_q,
            ])
        return rows
