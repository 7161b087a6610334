"""Services for the NPG inner solver, outer loops and step schedules."""
import logging
import math

import numpy as np
from django.conf import settings

from apps.core.exceptions import ConfigurationError, NumericDivergenceError
from apps.core.rng import Phase, RngStream
from apps.estimators.services import EstimatorService
from apps.mdp.services import MdpService
from apps.oracle.services import OracleService
from apps.policy.domain import PolicyParams
from apps.policy.services import PolicyService

from .domain import (
    EmpiricalEstimator,
    IterationRecord,
    MlmcEstimator,
    NpgConfig,
    OracleEstimator,
    RunReport,
)

logger = logging.getLogger(__name__)


def _ceil(x):
    # ceil without float noise such as 1/0.1**2 = 99.99999999999999
    return int(math.ceil(round(x, 9)))


class NpgService:
    """Service class for natural policy gradient runs."""

    @staticmethod
    def fixed_supplier(fisher, grad):
        """Inner-step supplier that returns the same (F, g) every step."""
        fisher = np.asarray(fisher, dtype=float)
        grad = np.asarray(grad, dtype=float)
        return lambda n: (fisher, grad)

    @staticmethod
    def solve_direction(step_supplier, n_iters, beta, omega_init,
                        on_step=None):
        """
        Run omega_{n+1} = omega_n - beta (F_n omega_n - g_n) for N steps.

        Args:
            step_supplier: callable n -> (F_n, g_n)
            n_iters (int): N, at least 1
            beta (float): inner step size
            omega_init: starting direction
            on_step: optional callback (n, omega_{n+1})

        Returns:
            ndarray: omega_N
        """
        if n_iters < 1:
            raise ConfigurationError('inner_iters must be >= 1')
        if not beta > 0:
            raise ConfigurationError('step_beta must be positive')
        omega = np.array(omega_init, dtype=float)
        for n in range(n_iters):
            fisher, grad = step_supplier(n)
            if not np.all(np.isfinite(grad)):
                raise NumericDivergenceError(
                    f'non-finite gradient estimate at inner step {n}',
                    iteration=n,
                )
            omega = omega - beta * (fisher @ omega - grad)
            if not np.all(np.isfinite(omega)):
                raise NumericDivergenceError(
                    f'inner iterate diverged at step {n}; step_beta '
                    f'{beta:g} is likely too large',
                    iteration=n,
                )
            if on_step is not None:
                on_step(n, omega)
        return omega

    @staticmethod
    def default_beta(mdp, policy):
        """beta = mu / Lambda_F with mu the oracle range floor."""
        mu = OracleService.exact_fisher(mdp, policy).mu_range
        if mu <= 0:
            raise ConfigurationError(
                'step_beta must be given when the Fisher range floor is zero'
            )
        return mu / PolicyService.score_bound() ** 2

    @staticmethod
    def _record(mdp, f, policy, k, used, omega, level_q=None,
                truncated=None):
        values = OracleService.exact_values(mdp, policy)
        grad = f.grad(values.J) @ OracleService.return_jacobian(mdp, policy)
        return IterationRecord(
            k=k,
            exact_f=float(f.value(values.J)),
            exact_J=tuple(float(j) for j in values.J),
            trajectories_this_iter=int(used),
            omega_norm=float(np.linalg.norm(omega)),
            grad_norm_exact=float(np.linalg.norm(grad)),
            level_q=level_q,
            truncated=truncated,
        )

    @staticmethod
    def _run(mdp, f, config, algorithm, partials_step):
        if f.n_objectives != mdp.n_objectives:
            raise ConfigurationError(
                f'scalarization expects {f.n_objectives} objectives, MDP '
                f'has {mdp.n_objectives}'
            )
        policy = PolicyParams.for_mdp(mdp, config.theta_init)
        if config.omega_init is not None and (
                config.omega_init.shape != (policy.dim,)):
            raise ConfigurationError(
                f'omega_init must have length {policy.dim}'
            )
        if config.step_beta is None:
            config = config.with_beta(NpgService.default_beta(mdp, policy))
        beta = config.step_beta
        omega_start = (
            np.zeros(policy.dim) if config.omega_init is None
            else config.omega_init
        )
        stream = RngStream(master_seed=config.master_seed)
        omega = omega_start
        records = []
        logger.info(
            'Starting %s: K=%d N=%d H=%d alpha=%g beta=%g',
            algorithm, config.outer_iters, config.inner_iters,
            config.horizon, config.step_alpha, beta,
        )
        for k in range(config.outer_iters):
            iteration = stream.for_iteration(k)
            if config.refresh_mu and k > 0:
                beta = NpgService.default_beta(mdp, policy)
            supplier, used, level_q, truncated = partials_step(
                policy, iteration
            )
            start = omega if config.warm_start else omega_start
            try:
                omega = NpgService.solve_direction(
                    supplier, config.inner_iters, beta, start
                )
                policy = PolicyService.update_params(
                    policy, config.step_alpha, omega
                )
            except NumericDivergenceError as exc:
                raise NumericDivergenceError(
                    exc.message, iteration=k, inner_step=exc.iteration
                ) from exc
            record = NpgService._record(
                mdp, f, policy, k, used, omega, level_q, truncated
            )
            logger.debug(
                'k=%d f=%.10g |omega|=%.4g trajectories=%d',
                k, record.exact_f, record.omega_norm, used,
            )
            records.append(record)

        report = RunReport(
            algorithm=algorithm,
            config=config,
            iterations=tuple(records),
            theta_final=policy.theta.copy(),
        )
        logger.info(
            'Finished %s: %d trajectories', algorithm,
            report.total_trajectories,
        )
        return report

    @staticmethod
    def _sampled_supplier(mdp, policy, partials, config, iteration,
                          batch_size, threads):
        def supplier(n):
            batch = MdpService.sample_batch(
                mdp, policy, config.horizon,
                iteration.with_phase(Phase.INNER, n), batch_size, threads,
            )
            grad, fisher = EstimatorService.batch_statistics(
                batch, partials, policy, mdp, config.fisher_normalized
            )
            return fisher, grad
        return supplier

    @staticmethod
    def run_vanilla_npg(mdp, f, config, threads=None):
        """
        NPG with batch plug-in partials.

        Each outer iteration estimates J from B1 trajectories, fixes the
        partials, and runs the inner solver on B2 fresh trajectories per
        step.

        Returns:
            RunReport: exact diagnostics per iteration
        """
        estimator = config.estimator
        if not isinstance(estimator, EmpiricalEstimator):
            raise ConfigurationError('run_vanilla_npg needs B1 and B2')

        def partials_step(policy, iteration):
            estimate = EstimatorService.empirical_return(
                mdp, policy, config.horizon, estimator.batch_j,
                iteration.with_phase(Phase.J_BATCH), threads,
            )
            partials = f.grad(estimate.j_hat)
            supplier = NpgService._sampled_supplier(
                mdp, policy, partials, config, iteration,
                estimator.batch_inner, threads,
            )
            used = (
                estimator.batch_j
                + config.inner_iters * estimator.batch_inner
            )
            return supplier, used, None, None

        return NpgService._run(mdp, f, config, 'npg', partials_step)

    @staticmethod
    def run_mlmc_npg(mdp, f, config, threads=None):
        """
        NPG with MLMC partials.

        Returns:
            RunReport: records carry the drawn level and truncation flag
        """
        estimator = config.estimator
        if not isinstance(estimator, MlmcEstimator):
            raise ConfigurationError('run_mlmc_npg needs B_max and B')

        def partials_step(policy, iteration):
            mlmc = EstimatorService.mlmc_partials(
                mdp, policy, f, config.horizon, estimator.b_max, iteration,
                estimator.coupled_base, threads,
            )
            supplier = NpgService._sampled_supplier(
                mdp, policy, mlmc.partials, config, iteration,
                estimator.batch_inner, threads,
            )
            used = (
                mlmc.trajectories_used
                + config.inner_iters * estimator.batch_inner
            )
            return supplier, used, mlmc.level_q, mlmc.truncated

        return NpgService._run(
            mdp, f, config, 'mlmc_npg', partials_step
        )

    @staticmethod
    def run_oracle_npg(mdp, f, config, threads=None):
        """NPG with exact infinite-horizon gradient and Fisher matrix."""
        if not isinstance(config.estimator, OracleEstimator):
            raise ConfigurationError(
                'run_oracle_npg needs the oracle estimator'
            )

        def partials_step(policy, iteration):
            spectrum = OracleService.exact_fisher(mdp, policy)
            grad = OracleService.exact_scalarized_gradient(mdp, policy, f)
            supplier = NpgService.fixed_supplier(spectrum.fisher, grad)
            return supplier, 0, None, None

        return NpgService._run(
            mdp, f, config, 'oracle_npg', partials_step
        )

    @staticmethod
    def theorem_schedule(epsilon, constants, which, R_0=None,
                         k_constant=None, alpha_scale=1.0, master_seed=0,
                         **overrides):
        """
        Step sizes, batch sizes and iteration counts from the theorems.

        Args:
            epsilon (float): target accuracy in (0, 1)
            constants (TheoryConstants): constants with mu > 0
            which (str): ``theorem1`` (MLMC) or ``theorem2`` (vanilla)
            R_0 (float): initial inner-loop distance, defaults to
                R0_FALLBACK
            k_constant (float): constant in K = k / (alpha epsilon)
            alpha_scale (float): constant in the theorem1 step
                alpha = scale * cap * epsilon * ln(1/epsilon), where
                cap = mu / (4 L_J G_1^2)
            master_seed (int): seed of the run
            **overrides: NpgConfig fields, replacing derived ones when
                they overlap

        Returns:
            NpgConfig: the schedule; ``alpha_clamped`` records whether the
            theorem1 step hit the mu / (4 L_J G_1^2) cap
        """
        if not 0.0 < epsilon < 1.0:
            raise ConfigurationError('epsilon must lie in (0,1)')
        if which not in ('theorem1', 'theorem2'):
            raise ConfigurationError(f'unknown schedule {which!r}')
        if not constants.mu > 0:
            raise ConfigurationError(
                'schedule needs a positive Fisher floor mu'
            )
        if k_constant is None:
            k_constant = settings.MORL_NPG['K_CONSTANT']
        if R_0 is None:
            R_0 = settings.MORL_NPG['R0_FALLBACK']

        gamma, mu, G_1 = constants.gamma, constants.mu, constants.G_1
        cap = mu / (4.0 * constants.L_J * G_1 ** 2)
        clamped = False
        if which == 'theorem1':
            alpha = alpha_scale * cap * epsilon * math.log(1.0 / epsilon)
            if alpha > cap:
                alpha, clamped = cap, True
                logger.warning(
                    'theorem1 step clamped to mu/(4 L_J G_1^2) = %g', cap
                )
            estimator = MlmcEstimator(
                b_max=_ceil(1.0 / epsilon ** 2), batch_inner=1
            )
        else:
            alpha = cap
            batch = _ceil(1.0 / ((1.0 - gamma) ** 2 * epsilon))
            estimator = EmpiricalEstimator(batch_j=batch, batch_inner=batch)

        inner = (
            4.0 * constants.C * constants.n_objectives * G_1
            / (mu ** 2 * (1.0 - gamma) ** 2)
            * math.log(R_0 ** 2 / epsilon ** 2)
        )
        fields = dict(
            outer_iters=_ceil(k_constant / (alpha * epsilon)),
            inner_iters=max(1, _ceil(inner)),
            horizon=_ceil(
                2.0 * math.log(1.0 / epsilon) / math.log(1.0 / gamma)
            ),
            step_alpha=alpha,
            estimator=estimator,
            master_seed=master_seed,
            k_constant=k_constant,
            alpha_clamped=clamped,
        )
        fields.update(overrides)
        return NpgConfig(**fields)
