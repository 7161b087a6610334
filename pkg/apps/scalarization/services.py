"""Services for scalarizations: evaluation, constants and construction."""
import logging

from apps.core.exceptions import ConfigurationError
from apps.policy.domain import SOFTMAX_TABULAR

from .domain import TheoryConstants

logger = logging.getLogger(__name__)


class ScalarizationService:
    """Service class for concave scalarizations."""

    @staticmethod
    def value(f, J):
        """Scalarized utility f(J)."""
        return f.value(J)

    @staticmethod
    def grad(f, J):
        """Partials (d f / d J_m)_m at J."""
        return f.grad(J)

    @staticmethod
    def constants(f, gamma, policy_class_constants=SOFTMAX_TABULAR, mu=0.0):
        """
        Theory constants of ``f`` on the box [delta_eff, 1/(1-gamma)]^M.

        Args:
            f (Scalarization): utility
            gamma (float): discount factor
            policy_class_constants (PolicyClassConstants): G_1 and G_2
            mu (float): Fisher floor, filled in by the oracle when known

        Returns:
            TheoryConstants: C, L_f, L_2f, G_1, G_2, L_J and mu
        """
        if not 0.0 < gamma < 1.0:
            raise ConfigurationError('gamma must lie in (0,1)')
        C, L_f, L_2f = f.bound_constants(1.0 / (1.0 - gamma))
        M = f.n_objectives
        G_2 = policy_class_constants.g2
        return TheoryConstants(
            gamma=gamma,
            n_objectives=M,
            C=float(C),
            L_f=float(L_f),
            L_2f=None if L_2f is None else float(L_2f),
            G_1=policy_class_constants.g1,
            G_2=G_2,
            L_J=M * C * G_2 / (1.0 - gamma) ** 2,
            mu=float(mu),
        )

    @staticmethod
    def build(config, gamma, n_objectives):
        """
        Build a scalarization from its run-config block.

        Args:
            config (dict): ``{"family": ..., ...}`` block
            gamma (float): discount factor (sets the default AlphaFair floor)
            n_objectives (int): M of the MDP it will be applied to

        Returns:
            Scalarization: the configured utility
        """
        from .serializers import ScalarizationSerializer

        serializer = ScalarizationSerializer(
            data=config,
            context={'gamma': gamma, 'n_objectives': n_objectives},
        )
        if not serializer.is_valid():
            raise ConfigurationError(
                'config: invalid scalarization block',
                violations=serializer.errors,
            )
        f = serializer.save()
        logger.debug('Built scalarization %s', f.as_dict())
        return f
