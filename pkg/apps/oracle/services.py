"""Services for exact values, gradients, Fisher spectra and enumeration."""
import itertools
import logging
import math

import numpy as np
from django.conf import settings

from apps.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    OracleError,
    UnsupportedShapeError,
)
from apps.estimators.services import EstimatorService
from apps.mdp.domain import TrajectoryBatch
from apps.mdp.services import MdpService
from apps.policy.services import PolicyService

from .domain import (
    BatchExpectation,
    ExactQuantities,
    ExactValues,
    FisherSpectrum,
    GradientMoments,
    MlmcExpectation,
    ReferenceOptimum,
    TrajectoryEnumeration,
)

logger = logging.getLogger(__name__)

GRID_CHUNK = 100_000
ZOOM_POINTS = 21
REFINE_TOL = 1e-9


class OracleService:
    """Service class for ground-truth computations."""

    @staticmethod
    def _solve(matrix, rhs, label):
        try:
            solution = np.linalg.solve(matrix, rhs)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f'{label}: singular system') from exc
        residual = float(np.max(np.abs(matrix @ solution - rhs), initial=0.0))
        scale = max(
            1.0,
            float(np.max(np.abs(rhs), initial=0.0)),
            float(np.max(np.abs(solution), initial=0.0)),
        )
        tol = settings.MORL_NPG['SOLVE_RESIDUAL_TOL'] * scale
        if not residual <= tol:
            raise OracleError(
                f'{label}: residual {residual:.3g} exceeds {tol:.3g}',
                residual=residual,
            )
        return solution

    @staticmethod
    def values_from_probs(mdp, probs):
        """
        Solve the Bellman systems for an (S, A) action-probability table.

        Args:
            mdp (TabularMdp): environment
            probs: (S, A) table pi(a|s)

        Returns:
            ExactValues: J, V, Q, advantages and occupancies
        """
        gamma = mdp.discount
        system = np.eye(mdp.n_states) - gamma * mdp.policy_transitions(probs)
        r_bar = mdp.policy_rewards(probs)
        V = OracleService._solve(system, r_bar.T, 'value solve').T
        Q = mdp.rewards + gamma * np.einsum(
            'sat,mt->msa', mdp.transitions, V
        )
        d = (1.0 - gamma) * OracleService._solve(
            system.T, mdp.initial_dist, 'occupancy solve'
        )
        return ExactValues(
            J=V @ mdp.initial_dist,
            V=V,
            Q=Q,
            A_adv=Q - V[:, :, None],
            state_occupancy=d,
            occupancy=d[:, None] * probs,
            probs=probs,
        )

    @staticmethod
    def exact_values(mdp, policy):
        """
        Exact infinite-horizon values of ``policy``.

        Returns:
            ExactValues: J, V, Q, A_adv, d and nu
        """
        MdpService.check_policy(mdp, policy)
        return OracleService.values_from_probs(
            mdp, PolicyService.all_action_probs(policy)
        )

    @staticmethod
    def state_distributions(mdp, probs, horizon):
        """Pr(s_t = s) for t < horizon, shape (H, S)."""
        P_pi = mdp.policy_transitions(probs)
        dists = np.empty((horizon, mdp.n_states))
        x = mdp.initial_dist
        for t in range(horizon):
            dists[t] = x
            x = x @ P_pi
        return dists

    @staticmethod
    def exact_returns_truncated(mdp, policy, horizon):
        """J_H,m = sum_{t<H} gamma^t x_t . r_bar_m."""
        if horizon < 1:
            raise ConfigurationError('horizon must be >= 1')
        MdpService.check_policy(mdp, policy)
        probs = PolicyService.all_action_probs(policy)
        dists = OracleService.state_distributions(mdp, probs, horizon)
        per_step = dists @ mdp.policy_rewards(probs).T
        return MdpService.discounts(mdp.discount, horizon) @ per_step

    @staticmethod
    def return_jacobian(mdp, policy, horizon=None):
        """
        Jacobian of the return vector with respect to theta.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): parameters
            horizon (int): None for the infinite-horizon objective,
                otherwise H for J_H

        Returns:
            ndarray: (M, d) matrix whose row m is grad J_m
        """
        MdpService.check_policy(mdp, policy)
        gamma = mdp.discount
        probs = PolicyService.all_action_probs(policy)
        scores = PolicyService.score_table(policy, probs)
        if horizon is None:
            values = OracleService.values_from_probs(mdp, probs)
            return np.einsum(
                'sa,msa,sad->md', values.occupancy, values.A_adv, scores
            ) / (1.0 - gamma)
        if horizon < 1:
            raise ConfigurationError('horizon must be >= 1')

        # forward sensitivity of x_{t+1} = x_t P_pi
        dpi = probs[:, :, None] * scores
        dP = np.einsum('sat,sad->dst', mdp.transitions, dpi)
        dr = np.einsum('msa,sad->dms', mdp.rewards, dpi)
        P_pi = mdp.policy_transitions(probs)
        r_bar = mdp.policy_rewards(probs)

        x = mdp.initial_dist.copy()
        dx = np.zeros((policy.dim, mdp.n_states))
        jacobian = np.zeros((mdp.n_objectives, policy.dim))
        for t in range(horizon):
            weight = gamma ** t
            jacobian += weight * (dx @ r_bar.T).T
            jacobian += weight * np.einsum('s,dms->md', x, dr)
            dx = dx @ P_pi + np.einsum('s,dst->dt', x, dP)
            x = x @ P_pi
        return jacobian

    @staticmethod
    def exact_scalarized_gradient(mdp, policy, f, horizon=None):
        """
        grad_theta f(J) or, with ``horizon``, grad_theta f(J_H).

        Returns:
            ndarray: gradient of length d
        """
        if horizon is None:
            J = OracleService.exact_values(mdp, policy).J
        else:
            J = OracleService.exact_returns_truncated(mdp, policy, horizon)
        jacobian = OracleService.return_jacobian(mdp, policy, horizon)
        return f.grad(J) @ jacobian

    @staticmethod
    def spectrum(fisher, cutoff=None):
        """
        Eigen-decompose a Fisher matrix with a relative rank cutoff.

        Args:
            fisher: symmetric (d, d) matrix
            cutoff: relative cutoff, defaults to FISHER_RANK_CUTOFF

        Returns:
            FisherSpectrum: matrix, range floor, top eigenvalue and pinv
        """
        if cutoff is None:
            cutoff = settings.MORL_NPG['FISHER_RANK_CUTOFF']
        fisher = 0.5 * (fisher + fisher.T)
        eigvals, eigvecs = np.linalg.eigh(fisher)
        lambda_F = max(float(eigvals[-1]), 0.0)
        keep = eigvals > cutoff * lambda_F
        kept_vals, kept_vecs = eigvals[keep], eigvecs[:, keep]
        return FisherSpectrum(
            fisher=fisher,
            mu_range=float(kept_vals.min()) if kept_vals.size else 0.0,
            lambda_F=lambda_F,
            pinv=(kept_vecs / kept_vals) @ kept_vecs.T,
            rank=int(keep.sum()),
        )

    @staticmethod
    def exact_fisher(mdp, policy):
        """F = sum_{s,a} nu(s,a) psi psi^T with its spectrum."""
        values = OracleService.exact_values(mdp, policy)
        scores = PolicyService.score_table(policy, values.probs)
        fisher = np.einsum(
            'sa,sai,saj->ij', values.occupancy, scores, scores
        )
        return OracleService.spectrum(fisher)

    @staticmethod
    def expected_fisher_sample(mdp, policy, horizon, normalize=True):
        """
        Exact mean of the one-trajectory Fisher estimator at horizon H.

        Returns:
            ndarray: (d, d) sum_t gamma^t E[psi_t psi_t^T], times
            (1 - gamma) when ``normalize`` is set
        """
        MdpService.check_policy(mdp, policy)
        probs = PolicyService.all_action_probs(policy)
        scores = PolicyService.score_table(policy, probs)
        per_state = np.einsum('sa,sai,saj->sij', probs, scores, scores)
        dists = OracleService.state_distributions(mdp, probs, horizon)
        weights = MdpService.discounts(mdp.discount, horizon) @ dists
        fisher = np.einsum('s,sij->ij', weights, per_state)
        if normalize:
            fisher *= 1.0 - mdp.discount
        return fisher

    @staticmethod
    def exact_npg_direction(mdp, policy, f):
        """omega* = F^+ grad f(J) with the rank-cutoff pseudoinverse."""
        spectrum = OracleService.exact_fisher(mdp, policy)
        grad = OracleService.exact_scalarized_gradient(mdp, policy, f)
        return spectrum.solve(grad)

    @staticmethod
    def exact_quantities(mdp, policy, f, horizon=None):
        """
        Every exact quantity for one (mdp, theta, f) triple.

        Returns:
            ExactQuantities: values, gradients, Fisher spectrum and omega*
        """
        values = OracleService.exact_values(mdp, policy)
        spectrum = OracleService.exact_fisher(mdp, policy)
        grad_f = f.grad(values.J) @ OracleService.return_jacobian(mdp, policy)
        J_H = grad_f_H = None
        if horizon is not None:
            J_H = OracleService.exact_returns_truncated(mdp, policy, horizon)
            grad_f_H = OracleService.exact_scalarized_gradient(
                mdp, policy, f, horizon
            )
        return ExactQuantities(
            values=values,
            J_H=J_H,
            horizon=horizon,
            grad_f=grad_f,
            grad_f_H=grad_f_H,
            spectrum=spectrum,
            npg_direction=spectrum.solve(grad_f),
            f_value=float(f.value(values.J)),
        )

    @staticmethod
    def gradient_norm_bound(constants):
        """C * M * G_1 / (1 - gamma)^2."""
        return (
            constants.C * constants.n_objectives * constants.G_1
            / (1.0 - constants.gamma) ** 2
        )

    @staticmethod
    def horizon_gradient_bound(constants, horizon):
        """Upper bound on ||grad f(J) - grad f(J_H)||."""
        gamma, H = constants.gamma, horizon
        M = constants.n_objectives
        tail = gamma ** H
        smooth_part = (
            math.sqrt(M) * constants.L_f
            * (1.0 - tail - H * tail * (1.0 - gamma)) / (1.0 - gamma)
        )
        return (
            M * constants.G_1 * tail / (1.0 - gamma) ** 2
            * (smooth_part + constants.C * (1.0 + H * (1.0 - gamma)))
        )

    @staticmethod
    def fisher_bias_bound(G_1, gamma, horizon):
        """||E[F_hat] - F|| <= G_1^2 gamma^H for the normalized estimator."""
        return G_1 ** 2 * gamma ** horizon

    @staticmethod
    def fisher_variance_bound(G_1, gamma, batch_size, horizon):
        """G_1^4 (1/B + gamma^(2H))."""
        return G_1 ** 4 * (1.0 / batch_size + gamma ** (2 * horizon))

    @staticmethod
    def return_mse_bound(n_objectives, gamma, batch_size):
        """E||J_hat - J_H||^2 <= M / ((1 - gamma)^2 B)."""
        return n_objectives / ((1.0 - gamma) ** 2 * batch_size)

    @staticmethod
    def _budget(budget):
        if budget is None:
            budget = settings.MORL_NPG['ENUMERATION_BUDGET']
        return int(budget)

    @staticmethod
    def count_paths(mdp, probs, horizon):
        """Exact number of positive-probability length-H paths."""
        support = probs > 0
        counts = [int(v > 0) for v in mdp.initial_dist]
        for _ in range(horizon - 1):
            following = [0] * mdp.n_states
            for s, count in enumerate(counts):
                if not count:
                    continue
                for a in np.flatnonzero(support[s]):
                    for s_next in np.flatnonzero(mdp.transitions[s, a] > 0):
                        following[s_next] += count
            counts = following
        return sum(
            count * int(support[s].sum()) for s, count in enumerate(counts)
        )

    @staticmethod
    def enumerate_trajectories(mdp, policy, horizon, budget=None):
        """
        List every positive-probability trajectory of length H.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): behaviour policy
            horizon (int): H
            budget (int): maximum number of paths

        Returns:
            TrajectoryEnumeration: paths, probabilities and returns
        """
        if horizon < 1:
            raise ConfigurationError('horizon must be >= 1')
        MdpService.check_policy(mdp, policy)
        budget = OracleService._budget(budget)
        probs = PolicyService.all_action_probs(policy)
        required = OracleService.count_paths(mdp, probs, horizon)
        if required > budget:
            raise BudgetExceededError(
                f'enumeration needs {required} paths, budget is {budget}',
                required=required, budget=budget,
            )

        rho = mdp.initial_dist
        states = np.flatnonzero(rho > 0)[:, None]
        actions = np.empty((states.shape[0], 0), dtype=int)
        path_probs = rho[states[:, 0]]
        for t in range(horizon):
            s = states[:, t]
            rows, acts = np.nonzero(probs[s] > 0)
            path_probs = path_probs[rows] * probs[s[rows], acts]
            states = states[rows]
            actions = np.column_stack([actions[rows], acts])
            if t + 1 < horizon:
                s, a = states[:, t], actions[:, t]
                rows, nxt = np.nonzero(mdp.transitions[s, a] > 0)
                path_probs = path_probs[rows] * mdp.transitions[
                    s[rows], a[rows], nxt
                ]
                states = np.column_stack([states[rows], nxt])
                actions = actions[rows]

        batch = TrajectoryBatch(states, actions)
        logger.debug('Enumerated %d paths at H=%d', batch.size, horizon)
        return TrajectoryEnumeration(
            states=states,
            actions=actions,
            probs=path_probs,
            returns=MdpService.batch_returns(batch, mdp),
        )

    @staticmethod
    def gradient_moments(mdp, policy, enumeration):
        """Exact path moments of the per-objective REINFORCE terms."""
        batch = TrajectoryBatch(enumeration.states, enumeration.actions)
        components = EstimatorService.reinforce_components(batch, policy, mdp)
        p = enumeration.probs
        return GradientMoments(
            mean=np.einsum('i,imd->md', p, components),
            gram=np.einsum('i,imd,ind->mn', p, components, components),
        )

    @staticmethod
    def compositions(n_parts, total):
        """All count vectors of length ``n_parts`` summing to ``total``."""
        if n_parts == 1:
            return np.array([[total]])
        slots = total + n_parts - 1
        bars = np.array(
            list(itertools.combinations(range(slots), n_parts - 1)),
            dtype=int,
        )
        edges = np.hstack([
            np.full((bars.shape[0], 1), -1),
            bars,
            np.full((bars.shape[0], 1), slots),
        ])
        return np.diff(edges, axis=1) - 1

    @staticmethod
    def multinomial_weights(counts, probs):
        """Probability of each count vector under B draws from ``probs``."""
        total = int(counts[0].sum())
        log_fact = np.array([math.lgamma(k + 1.0) for k in range(total + 1)])
        with np.errstate(divide='ignore'):
            log_p = np.log(probs)
        log_terms = np.where(counts > 0, counts * log_p, 0.0)
        log_w = log_fact[total] - log_fact[counts].sum(axis=1)
        log_w = log_w + log_terms.sum(axis=1)
        weights = np.exp(log_w - log_w.max())
        return weights / weights.sum()

    @staticmethod
    def enumerate_batch_expectation(mdp, policy, f, horizon, batch_size,
                                    budget=None, enumeration=None):
        """
        Exact moments of the batch plug-in partials at batch size B.

        Sums over multisets of path outcomes with multinomial weights, which
        gives the same expectation as ordered B-tuples.

        Args:
            mdp (TabularMdp): environment
            policy (PolicyParams): policy
            f (Scalarization): utility
            horizon (int): H
            batch_size (int): B
            budget (int): maximum number of enumerated terms
            enumeration (TrajectoryEnumeration): reuse an earlier path list

        Returns:
            BatchExpectation: E[partials], E[partials partials^T],
            E||J_hat - J_H||^2 and E[g]
        """
        if batch_size < 1:
            raise ConfigurationError('batch size must be >= 1')
        budget = OracleService._budget(budget)
        if enumeration is None:
            enumeration = OracleService.enumerate_trajectories(
                mdp, policy, horizon, budget
            )
        returns, probs = enumeration.outcomes()
        n_outcomes = probs.shape[0]
        required = enumeration.size + math.comb(
            batch_size + n_outcomes - 1, n_outcomes - 1
        )
        if required > budget:
            raise BudgetExceededError(
                f'batch enumeration needs {required} terms, budget is '
                f'{budget}',
                required=required, budget=budget,
            )

        counts = OracleService.compositions(n_outcomes, batch_size)
        weights = OracleService.multinomial_weights(counts, probs)
        j_hat = (counts / batch_size) @ returns
        partials = f.grad(j_hat)
        J_H = probs @ returns
        mean_partials = weights @ partials
        moments = OracleService.gradient_moments(mdp, policy, enumeration)
        return BatchExpectation(
            batch_size=batch_size,
            mean_partials=mean_partials,
            second_partials=np.einsum(
                'k,km,kn->mn', weights, partials, partials
            ),
            mse_J=float(weights @ np.sum((j_hat - J_H) ** 2, axis=1)),
            mean_gradient=mean_partials @ moments.mean,
            J_H=J_H,
            terms=required,
        )

    @staticmethod
    def enumerate_mlmc_expectation(mdp, policy, f, horizon, b_max,
                                   coupled_base=True, budget=None,
                                   enumeration=None):
        """
        Exact moments of the MLMC partials.

        Levels q <= floor(log2 B_max) are enumerated over every ordered
        2^q-tuple of outcomes; the remaining mass 2^-J goes to the
        single-trajectory plug-in.

        Returns:
            MlmcExpectation: E[partials], E[partials partials^T], E[g] and
            the expected number of trajectories per draw
        """
        budget = OracleService._budget(budget)
        if enumeration is None:
            enumeration = OracleService.enumerate_trajectories(
                mdp, policy, horizon, budget
            )
        returns, probs = enumeration.outcomes()
        n_outcomes = probs.shape[0]
        cap = EstimatorService.level_cap(b_max)
        required = enumeration.size + n_outcomes + sum(
            n_outcomes ** (2 ** q) for q in range(1, cap + 1)
        )
        if required > budget:
            raise BudgetExceededError(
                f'MLMC enumeration needs {required} terms, budget is '
                f'{budget}',
                required=required, budget=budget,
            )

        base = f.grad(returns)
        base_mean = probs @ base
        base_second = np.einsum('k,km,kn->mn', probs, base, base)
        tail = 2.0 ** -cap
        mean = tail * base_mean
        second = tail * base_second
        cost = tail
        for q in range(1, cap + 1):
            size = 2 ** q
            tuples = np.array(
                list(itertools.product(range(n_outcomes), repeat=size)),
                dtype=int,
            )
            weights = np.prod(probs[tuples], axis=1)
            diff = EstimatorService.level_difference(f, returns[tuples])
            if coupled_base:
                draws = base[tuples[:, 0]] + diff
                level_mean = weights @ draws
                level_second = np.einsum('k,km,kn->mn', weights, draws, draws)
            else:
                diff_mean = weights @ diff
                level_mean = base_mean + diff_mean
                level_second = (
                    np.einsum('k,km,kn->mn', weights, diff, diff)
                    + np.outer(diff_mean, base_mean)
                    + np.outer(base_mean, diff_mean)
                    + base_second
                )
            mean += 2.0 ** -q * level_mean
            second += 2.0 ** -q * level_second
            cost += 2.0 ** -q * (size if coupled_base else size + 1)

        moments = OracleService.gradient_moments(mdp, policy, enumeration)
        return MlmcExpectation(
            b_max=b_max,
            coupled_base=coupled_base,
            mean_partials=mean,
            second_partials=second,
            mean_gradient=mean @ moments.mean,
            expected_cost=cost,
            terms=required,
        )

    @staticmethod
    def batched_returns(mdp, tables):
        """Exact J for a stack of (S, A) probability tables, shape (N, M)."""
        P_pi = np.einsum('nsa,sat->nst', tables, mdp.transitions)
        r_bar = np.einsum('nsa,msa->nsm', tables, mdp.rewards)
        system = np.eye(mdp.n_states) - mdp.discount * P_pi
        V = np.linalg.solve(system, r_bar)
        return np.einsum('s,nsm->nm', mdp.initial_dist, V)

    @staticmethod
    def _policy_tables(mdp, points):
        # Map grid coordinates to probability tables; the second value masks
        # points outside the simplex.
        points = np.atleast_2d(points)
        n = points.shape[0]
        if mdp.n_actions == 1:
            return np.ones((n, mdp.n_states, 1)), np.ones(n, dtype=bool)
        if mdp.n_states == 1 and mdp.n_actions == 2:
            p = points[:, 0]
            return np.stack([p, 1.0 - p], axis=1)[:, None, :], np.ones(
                n, dtype=bool
            )
        if mdp.n_states == 1:
            p0, p1 = points[:, 0], points[:, 1]
            rest = 1.0 - p0 - p1
            valid = rest >= -1e-12
            rest = np.clip(rest, 0.0, 1.0)
            return np.stack([p0, p1, rest], axis=1)[:, None, :], valid
        p, q = points[:, 0], points[:, 1]
        tables = np.stack([
            np.stack([p, 1.0 - p], axis=1),
            np.stack([q, 1.0 - q], axis=1),
        ], axis=1)
        return tables, np.ones(n, dtype=bool)

    @staticmethod
    def _grid_values(mdp, f, points):
        values = np.full(points.shape[0], -np.inf)
        for start in range(0, points.shape[0], GRID_CHUNK):
            chunk = points[start:start + GRID_CHUNK]
            tables, valid = OracleService._policy_tables(mdp, chunk)
            if valid.any():
                J = OracleService.batched_returns(mdp, tables[valid])
                values[start:start + GRID_CHUNK][valid] = f.value(J)
        return values

    @staticmethod
    def reference_optimum(mdp, f, grid_resolution=None):
        """
        Grid search for max_pi f(J^pi) over small policy simplices.

        Supports bandits with at most three arms and two-state MDPs with at
        most two actions. The grid maximum is refined by ternary search in
        one dimension and by repeated local zooming in two.

        Returns:
            ReferenceOptimum: f*, the maximizing table and its returns
        """
        resolution = grid_resolution or settings.MORL_NPG['GRID_RESOLUTION']
        if resolution < 1000:
            raise ConfigurationError(
                'grid_resolution must be >= 1000 points per dimension'
            )
        S, A = mdp.n_states, mdp.n_actions
        if not ((S == 1 and A <= 3) or (S == 2 and A <= 2)):
            raise UnsupportedShapeError(
                f'reference optimum supports bandits with A <= 3 and '
                f'2-state MDPs with A <= 2, got S={S} A={A}',
                n_states=S, n_actions=A,
            )

        dim = 0 if A == 1 else (1 if S == 1 and A == 2 else 2)
        if dim == 0:
            best = np.zeros((1, 1))
        else:
            axis = np.linspace(0.0, 1.0, resolution)
            if dim == 1:
                points = axis[:, None]
            else:
                grid = np.meshgrid(axis, axis, indexing='ij')
                points = np.stack([g.reshape(-1) for g in grid], axis=1)
            values = OracleService._grid_values(mdp, f, points)
            best = points[np.argmax(values)][None, :]
            width = 1.0 / (resolution - 1)
            if dim == 1:
                best = OracleService._ternary(mdp, f, best[0, 0], width)
            else:
                best = OracleService._zoom(mdp, f, best, width)

        tables, _ = OracleService._policy_tables(mdp, best)
        J_star = OracleService.batched_returns(mdp, tables)[0]
        f_star = float(f.value(J_star))
        logger.info('Reference optimum f*=%.10g at %s', f_star, best[0])
        return ReferenceOptimum(
            f_star=f_star, action_probs=tables[0], J_star=J_star
        )

    @staticmethod
    def _ternary(mdp, f, center, width):
        def value(p):
            return OracleService._grid_values(mdp, f, np.array([[p]]))[0]

        low, high = max(center - width, 0.0), min(center + width, 1.0)
        while high - low > REFINE_TOL:
            left = low + (high - low) / 3.0
            right = high - (high - low) / 3.0
            if value(left) < value(right):
                low = left
            else:
                high = right
        candidates = np.array([[center], [0.5 * (low + high)]])
        values = OracleService._grid_values(mdp, f, candidates)
        return candidates[np.argmax(values)][None, :]

    @staticmethod
    def _zoom(mdp, f, best, width):
        best_value = OracleService._grid_values(mdp, f, best)[0]
        while width > REFINE_TOL:
            offsets = np.linspace(-width, width, ZOOM_POINTS)
            grid = np.meshgrid(
                np.clip(best[0, 0] + offsets, 0.0, 1.0),
                np.clip(best[0, 1] + offsets, 0.0, 1.0),
                indexing='ij',
            )
            points = np.stack([g.reshape(-1) for g in grid], axis=1)
            values = OracleService._grid_values(mdp, f, points)
            index = int(np.argmax(values))
            if values[index] > best_value:
                best, best_value = points[index][None, :], values[index]
            width /= 5.0
        return best
