"""Services for measurement campaigns, experiment runs and report files."""
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.conf import settings

from apps.core.exceptions import (
    ConfigurationError,
    InsufficientReplicationsError,
    RefusalError,
    UnsupportedShapeError,
)
from apps.core.rng import Phase, RngStream
from apps.core.utils.files import (
    read_json,
    render_csv,
    render_json,
    write_atomic,
)
from apps.core.utils.parallel import map_chunks
from apps.estimators.services import EstimatorService
from apps.mdp.services import MdpService
from apps.npg.domain import CSV_COLUMNS, EmpiricalEstimator, MlmcEstimator
from apps.npg.domain import NpgConfig
from apps.npg.services import NpgService
from apps.npg.utils import run_npg
from apps.oracle.services import OracleService
from apps.policy.domain import PolicyParams
from apps.scalarization.services import ScalarizationService

from .domain import (
    CAMPAIGN_CSV_COLUMNS,
    BiasVarianceReport,
    BiasVarianceRow,
    BudgetComparison,
    InnerLoopDiagnostics,
    SlopeFit,
)

logger = logging.getLogger(__name__)

# Bias below this is treated as exactly zero and kept out of slope fits.
ZERO_BIAS = 1e-12
CI_SIGMAS = 3.0


class HarnessService:
    """Service class for experiment orchestration."""

    @staticmethod
    def fit_loglog_slope(points):
        """
        Ordinary least squares on (ln x, ln y).

        Args:
            points: iterable of (x, y) with x > 0 and y > 0

        Returns:
            SlopeFit: slope, intercept, slope standard error, point count
        """
        points = [(float(x), float(y)) for x, y in points]
        if len(points) < 3:
            raise RefusalError(
                f'slope fit needs at least 3 points, got {len(points)}'
            )
        xs = np.array([x for x, _ in points])
        ys = np.array([y for _, y in points])
        if np.any(xs <= 0) or np.any(ys <= 0):
            raise RefusalError('slope fit needs positive x and y values')
        if np.unique(xs).size != xs.size:
            raise RefusalError('slope fit needs distinct x values')

        log_x, log_y = np.log(xs), np.log(ys)
        centred = log_x - log_x.mean()
        s_xx = centred @ centred
        slope = (centred @ (log_y - log_y.mean())) / s_xx
        intercept = log_y.mean() - slope * log_x.mean()
        residuals = log_y - (intercept + slope * log_x)
        dof = len(points) - 2
        stderr = np.sqrt((residuals @ residuals) / dof / s_xx) if dof else 0.0
        return SlopeFit(
            slope=float(slope),
            intercept=float(intercept),
            stderr=float(stderr),
            n_points=len(points),
        )

    @staticmethod
    def _replicate(fn, replications, threads):
        # fn(r) -> tuple of arrays; results stacked in replication order
        def work(indices):
            return [fn(r) for r in indices]

        results = []
        for part in map_chunks(work, replications, threads):
            results.extend(part)
        return [np.stack(column) for column in zip(*results)]

    @staticmethod
    def _enumerated_row(mdp, policy, f, horizon, estimator_kind, size,
                        reference, enumeration, moments, coupled_base,
                        budget):
        if estimator_kind == 'empirical':
            expectation = OracleService.enumerate_batch_expectation(
                mdp, policy, f, horizon, size, budget, enumeration
            )
            mse_J = expectation.mse_J
        else:
            expectation = OracleService.enumerate_mlmc_expectation(
                mdp, policy, f, horizon, size, coupled_base, budget,
                enumeration,
            )
            mse_J = None
        return BiasVarianceRow(
            B=size,
            bias_norm=float(
                np.linalg.norm(expectation.mean_gradient - reference)
            ),
            variance=moments.second_moment(
                expectation.mean_partials, expectation.second_partials,
                reference,
            ),
            mse_J=mse_J,
            replications=0,
            ci_halfwidth=0.0,
        )

    @staticmethod
    def _montecarlo_row(mdp, policy, f, horizon, estimator_kind, size,
                        reference, J_H, replications, seed, row_index,
                        coupled_base, threads):
        def replicate(r):
            stream = RngStream(
                master_seed=seed,
                outer_iteration=row_index * replications + r,
            )
            if estimator_kind == 'empirical':
                estimate = EstimatorService.empirical_return(
                    mdp, policy, horizon, size,
                    stream.with_phase(Phase.J_BATCH), threads=1,
                )
                partials, j_hat = f.grad(estimate.j_hat), estimate.j_hat
            else:
                partials = EstimatorService.mlmc_partials(
                    mdp, policy, f, horizon, size, stream, coupled_base,
                    threads=1,
                ).partials
                j_hat = np.full(mdp.n_objectives, np.nan)
            traj = MdpService.sample_trajectory(
                mdp, policy, horizon, stream.with_phase(Phase.REPLICATION)
            )
            g = EstimatorService.reinforce_grad(traj, partials, policy, mdp)
            return g.g, j_hat

        grads, j_hats = HarnessService._replicate(
            replicate, replications, threads
        )
        errors = grads - reference
        spread = grads.var(axis=0, ddof=1).sum()
        mse_J = None
        if estimator_kind == 'empirical':
            mse_J = float(np.mean(np.sum((j_hats - J_H) ** 2, axis=1)))
        return BiasVarianceRow(
            B=size,
            bias_norm=float(np.linalg.norm(errors.mean(axis=0))),
            variance=float(np.mean(np.sum(errors ** 2, axis=1))),
            mse_J=mse_J,
            replications=replications,
            ci_halfwidth=float(CI_SIGMAS * np.sqrt(spread / replications)),
        )

    @staticmethod
    def _fit_or_none(rows, attribute, label):
        points = [(row.B, getattr(row, attribute)) for row in rows]
        if len(points) < 3:
            logger.warning(
                'Too few usable rows to fit the %s slope (%d)', label,
                len(points),
            )
            return None
        return HarnessService.fit_loglog_slope(points)

    @staticmethod
    def measure_bias_variance(mdp, theta, f, horizon, estimator_kind,
                              b_list, replications=None, mode='enumerate',
                              seed=0, coupled_base=True, budget=None,
                              threads=None):
        """
        Bias and second moment of the scalarized-gradient estimator.

        Bias is measured against the exact truncated-horizon gradient
        grad f(J_H), so the horizon term is reported separately.

        Args:
            mdp (TabularMdp): environment
            theta: policy parameters, None for zeros
            f (Scalarization): utility
            horizon (int): H
            estimator_kind (str): ``empirical`` (B is the batch size) or
                ``mlmc`` (B is B_max)
            b_list: batch sizes to measure
            replications (int): Monte Carlo replications per row
            mode (str): ``enumerate`` or ``montecarlo``
            seed (int): master seed for Monte Carlo rows
            coupled_base (bool): MLMC base-term coupling
            budget (int): enumeration budget
            threads (int): replication threads

        Returns:
            BiasVarianceReport: rows sorted by B with fitted slopes
        """
        if estimator_kind not in ('empirical', 'mlmc'):
            raise ConfigurationError(
                f'unknown estimator kind {estimator_kind!r}'
            )
        if mode not in ('enumerate', 'montecarlo'):
            raise ConfigurationError(f'unknown mode {mode!r}')
        sizes = sorted(set(int(b) for b in b_list))
        if not sizes or sizes[0] < 1:
            raise ConfigurationError('batch sizes must be >= 1')
        minimum = settings.MORL_NPG['MIN_MC_REPLICATIONS']
        if mode == 'montecarlo' and (replications or 0) < minimum:
            raise InsufficientReplicationsError(
                f'montecarlo mode needs at least {minimum} replications',
                replications=replications, minimum=minimum,
            )

        policy = PolicyParams.for_mdp(mdp, theta)
        reference = OracleService.exact_scalarized_gradient(
            mdp, policy, f, horizon
        )
        infinite = OracleService.exact_scalarized_gradient(mdp, policy, f)
        constants = ScalarizationService.constants(f, mdp.discount)
        J_H = OracleService.exact_returns_truncated(mdp, policy, horizon)

        rows = []
        if mode == 'enumerate':
            enumeration = OracleService.enumerate_trajectories(
                mdp, policy, horizon, budget
            )
            moments = OracleService.gradient_moments(mdp, policy, enumeration)
            for size in sizes:
                rows.append(HarnessService._enumerated_row(
                    mdp, policy, f, horizon, estimator_kind, size,
                    reference, enumeration, moments, coupled_base, budget,
                ))
        else:
            for index, size in enumerate(sizes):
                rows.append(HarnessService._montecarlo_row(
                    mdp, policy, f, horizon, estimator_kind, size,
                    reference, J_H, replications, seed, index,
                    coupled_base, threads,
                ))

        flagged = []
        for row in rows:
            excluded = row.bias_norm <= max(ZERO_BIAS, row.ci_halfwidth)
            if excluded:
                logger.warning(
                    'B=%d excluded from the bias fit (bias %.3g)', row.B,
                    row.bias_norm,
                )
            flagged.append(replace(row, excluded_from_fit=excluded))
        for row in flagged:
            logger.info(
                'B=%d bias=%.6g variance=%.6g', row.B, row.bias_norm,
                row.variance,
            )

        return BiasVarianceReport(
            rows=tuple(flagged),
            estimator_kind=estimator_kind,
            scalarization_kind=f.family,
            mode=mode,
            horizon=horizon,
            horizon_bias=float(np.linalg.norm(infinite - reference)),
            horizon_bias_bound=OracleService.horizon_gradient_bound(
                constants, horizon
            ),
            fitted_slope_bias=HarnessService._fit_or_none(
                [r for r in flagged if not r.excluded_from_fit],
                'bias_norm', 'bias',
            ),
            fitted_slope_variance=HarnessService._fit_or_none(
                [r for r in flagged if r.variance > 0],
                'variance', 'variance',
            ),
        )

    @staticmethod
    def measure_inner_loop(mdp, theta, f, horizon, batch_size, replications,
                           seed=0, normalize=True, omega_init=None,
                           threads=None):
        """
        Measure the inner-loop error conditions against the oracle.

        Returns:
            InnerLoopDiagnostics: Fisher bias and variance with CIs, the
            Fisher spectrum bound, the gradient bound and R_0
        """
        minimum = settings.MORL_NPG['MIN_MC_REPLICATIONS']
        if replications < minimum:
            raise InsufficientReplicationsError(
                f'inner-loop diagnostics need at least {minimum} '
                f'replications',
                replications=replications, minimum=minimum,
            )
        if batch_size < 1:
            raise ConfigurationError('batch size must be >= 1')
        gamma = mdp.discount
        policy = PolicyParams.for_mdp(mdp, theta)
        spectrum = OracleService.exact_fisher(mdp, policy)
        scale = 1.0 if normalize else 1.0 / (1.0 - gamma)
        reference = spectrum.fisher * scale

        batch = MdpService.sample_batch(
            mdp, policy, horizon,
            RngStream(master_seed=seed, phase=Phase.REPLICATION),
            replications * batch_size, threads,
        )
        fishers = EstimatorService.trajectory_fishers(
            batch, policy, gamma, normalize
        )
        fishers = fishers.reshape(
            replications, batch_size, policy.dim, policy.dim
        ).mean(axis=1)
        mean = fishers.mean(axis=0)
        entry_var = fishers.var(axis=0, ddof=1)
        deviations = np.sum((fishers - mean) ** 2, axis=(1, 2))
        deviations *= replications / (replications - 1.0)

        grad = OracleService.exact_scalarized_gradient(mdp, policy, f)
        omega_star = spectrum.solve(grad)
        omega_0 = (
            np.zeros(policy.dim) if omega_init is None
            else np.asarray(omega_init, dtype=float)
        )
        constants = ScalarizationService.constants(f, gamma)
        return InnerLoopDiagnostics(
            sigma_F_sq=float(deviations.mean()),
            sigma_F_sq_ci=float(
                CI_SIGMAS * deviations.std(ddof=1) / np.sqrt(replications)
            ),
            delta_F=float(np.linalg.norm(mean - reference, ord=2)),
            delta_F_ci=float(
                CI_SIGMAS * np.sqrt(entry_var.sum() / replications)
            ),
            lambda_F=spectrum.lambda_F * scale,
            lambda_g=OracleService.gradient_norm_bound(constants),
            R_0=float(np.linalg.norm(omega_0 - omega_star)),
            fisher_bias_bound=scale * OracleService.fisher_bias_bound(
                constants.G_1, gamma, horizon
            ),
            fisher_variance_bound=scale ** 2 * (
                OracleService.fisher_variance_bound(
                    constants.G_1, gamma, batch_size, horizon
                )
            ),
            grad_norm=float(np.linalg.norm(grad)),
            batch_size=batch_size,
            replications=replications,
        )

    @staticmethod
    def measure_inner_loop_for_config(mdp, f, config, replications,
                                      threads=None):
        """
        Inner-loop diagnostics at the settings an NPG run would use.

        Reads H, the inner batch B2 (or B), the seed, the Fisher
        normalization, omega_init and theta_init from ``config``.

        Returns:
            InnerLoopDiagnostics: as ``measure_inner_loop``
        """
        batch_size = getattr(config.estimator, 'batch_inner', None)
        if batch_size is None:
            raise ConfigurationError(
                'inner-loop diagnostics need a sampling estimator, got '
                f'{config.estimator.kind!r}'
            )
        return HarnessService.measure_inner_loop(
            mdp, config.theta_init, f, config.horizon, batch_size,
            replications, seed=config.master_seed,
            normalize=config.fisher_normalized,
            omega_init=config.omega_init, threads=threads,
        )

    @staticmethod
    def try_reference(mdp, f, grid_resolution=None):
        """reference_optimum, or None when the MDP shape is unsupported."""
        try:
            return OracleService.reference_optimum(mdp, f, grid_resolution)
        except UnsupportedShapeError as exc:
            logger.info('No reference optimum: %s', exc.message)
            return None

    @staticmethod
    def build_npg_config(mdp, f, algorithm, schedule, seed):
        """
        NpgConfig from a validated schedule block.

        Theorem schedules take mu from the oracle at theta_init and R_0
        from ||omega*|| there unless given. ``outer_iters`` and
        ``inner_iters`` in a theorem block replace the derived counts.
        """
        if 'explicit' in schedule:
            block = schedule['explicit']
            if algorithm == 'npg':
                estimator = EmpiricalEstimator(
                    batch_j=block['B1'], batch_inner=block['B2']
                )
            else:
                estimator = MlmcEstimator(
                    b_max=block['B_max'], batch_inner=block['B'],
                    coupled_base=block['coupled_base'],
                )
            return NpgConfig(
                outer_iters=block['outer_iters'],
                inner_iters=block['inner_iters'],
                horizon=block['horizon'],
                step_alpha=block['step_alpha'],
                step_beta=block.get('step_beta'),
                estimator=estimator,
                master_seed=seed,
                omega_init=block.get('omega_init'),
                fisher_normalized=block['fisher_normalized'],
                theta_init=block.get('theta_init'),
                warm_start=block['warm_start'],
                refresh_mu=block['refresh_mu'],
            )

        block = schedule['theorem']
        policy = PolicyParams.for_mdp(mdp, block.get('theta_init'))
        spectrum = OracleService.exact_fisher(mdp, policy)
        constants = ScalarizationService.constants(
            f, mdp.discount, mu=spectrum.mu_range
        )
        R_0 = block.get('R_0')
        if R_0 is None:
            grad = OracleService.exact_scalarized_gradient(mdp, policy, f)
            R_0 = float(np.linalg.norm(spectrum.solve(grad))) or None
        overrides = {
            name: block[name] for name in ('outer_iters', 'inner_iters')
            if name in block
        }
        return NpgService.theorem_schedule(
            block['epsilon'], constants, block['which'], R_0=R_0,
            k_constant=block.get('k_constant'),
            alpha_scale=block.get('alpha_scale', 1.0), master_seed=seed,
            theta_init=block.get('theta_init'), **overrides,
        )

    @staticmethod
    def write_run_report(report, directory):
        """Write report.json and report.csv atomically into ``directory``."""
        directory = Path(directory)
        write_atomic(directory / 'report.json', render_json(report.as_dict()))
        write_atomic(
            directory / 'report.csv',
            render_csv(CSV_COLUMNS, report.csv_rows()),
        )
        return directory

    @staticmethod
    def write_campaign_report(report, directory):
        """Write a BiasVarianceReport as JSON plus a per-row CSV."""
        directory = Path(directory)
        write_atomic(directory / 'report.json', render_json(report.as_dict()))
        rows = [
            [row.as_dict()[column] for column in CAMPAIGN_CSV_COLUMNS]
            for row in report.rows
        ]
        write_atomic(
            directory / 'report.csv', render_csv(CAMPAIGN_CSV_COLUMNS, rows)
        )
        return directory

    @staticmethod
    def run_experiment(config_path, threads=None, out=None, seed=None,
                       algorithm=None):
        """
        Execute a run config and write its reports.

        Args:
            config_path: run config JSON
            threads (int): sampling threads
            out: output directory, overrides ``output_path``
            seed (int): overrides the config seed
            algorithm (str): when given, the config must use it

        Returns:
            tuple: (RunReport, output directory)
        """
        from .serializers import RunConfigSerializer

        config_path = Path(config_path)
        serializer = RunConfigSerializer(
            data=read_json(config_path, label='config')
        )
        if not serializer.is_valid():
            raise ConfigurationError(
                'config: invalid run config', path=str(config_path),
                violations=serializer.errors,
            )
        data = serializer.validated_data
        if algorithm is not None and data['algorithm'] != algorithm:
            raise ConfigurationError(
                f'config: algorithm is {data["algorithm"]!r}, expected '
                f'{algorithm!r}'
            )

        mdp = MdpService.load(config_path.parent / data['mdp_path'])
        f = ScalarizationService.build(
            data['scalarization'], mdp.discount, mdp.n_objectives
        )
        seed = data['seed'] if seed is None else seed
        npg_config = HarnessService.build_npg_config(
            mdp, f, data['algorithm'], data['schedule'], seed
        )
        report = run_npg(mdp, f, npg_config, threads)
        reference = HarnessService.try_reference(mdp, f)
        if reference is not None:
            report = report.with_reference(reference.f_star)

        if out is not None:
            directory = Path(out)
        elif data.get('output_path'):
            directory = config_path.parent / data['output_path']
        else:
            directory = settings.MORL_NPG['REPORT_DIR'] / config_path.stem
        HarnessService.write_run_report(report, directory)
        logger.info('Wrote %s report to %s', data['algorithm'], directory)
        return report, directory

    @staticmethod
    def measure_budget_to_gap(report, f_star, gap):
        """
        Trajectories consumed up to the first iteration with gap <= ``gap``.

        Returns:
            int or None: cumulative trajectories, None if never reached
        """
        used = 0
        for record in report.iterations:
            used += record.trajectories_this_iter
            if f_star - record.exact_f <= gap:
                return used
        return None

    @staticmethod
    def compare_budgets(mdp, f, epsilons, seeds, outer_iters, inner_iters,
                        horizon, step_alpha, step_beta, batch_inner=1,
                        theta_init=None, threads=None):
        """
        Budget to reach gap epsilon, vanilla against MLMC NPG.

        Vanilla uses B1 = ceil(1/epsilon^2); MLMC uses B_max of the same
        size. Both share the inner batch, step sizes and horizon.

        Returns:
            list: BudgetComparison per epsilon with per-seed budgets
        """
        reference = OracleService.reference_optimum(mdp, f)
        comparisons = []
        for epsilon in epsilons:
            size = int(np.ceil(round(1.0 / epsilon ** 2, 9)))
            budgets = {'npg': [], 'mlmc_npg': []}
            for seed in seeds:
                for algorithm, estimator in (
                        ('npg', EmpiricalEstimator(size, batch_inner)),
                        ('mlmc_npg', MlmcEstimator(size, batch_inner))):
                    config = NpgConfig(
                        outer_iters=outer_iters,
                        inner_iters=inner_iters,
                        horizon=horizon,
                        step_alpha=step_alpha,
                        step_beta=step_beta,
                        estimator=estimator,
                        master_seed=seed,
                        theta_init=theta_init,
                    )
                    report = run_npg(mdp, f, config, threads)
                    budget = HarnessService.measure_budget_to_gap(
                        report, reference.f_star, epsilon
                    )
                    budgets[algorithm].append(
                        np.inf if budget is None else budget
                    )
            medians = {
                name: float(np.median(values))
                for name, values in budgets.items()
            }
            comparisons.append(BudgetComparison(
                epsilon=epsilon,
                gap=epsilon,
                vanilla_budget=(
                    None if np.isinf(medians['npg']) else medians['npg']
                ),
                mlmc_budget=(
                    None if np.isinf(medians['mlmc_npg'])
                    else medians['mlmc_npg']
                ),
                vanilla_budgets=tuple(budgets['npg']),
                mlmc_budgets=tuple(budgets['mlmc_npg']),
            ))
            logger.info(
                'epsilon=%g vanilla=%s mlmc=%s', epsilon,
                medians['npg'], medians['mlmc_npg'],
            )
        return comparisons
