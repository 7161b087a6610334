"""Utility functions for the exact oracles."""
from .services import OracleService


def exact_report(mdp, policy, f, horizon=None):
    """
    Help function to collect every exact quantity as a JSON-ready dict.

    Args:
        mdp: TabularMdp instance
        policy: PolicyParams instance
        f: Scalarization instance
        horizon: truncation length for the J_H and grad f(J_H) entries

    Returns:
        dict: exact quantities with the policy parameters echoed
    """
    quantities = OracleService.exact_quantities(mdp, policy, f, horizon)
    return {
        'theta': policy.theta.tolist(),
        'scalarization': f.as_dict(),
        **quantities.as_dict(),
    }
