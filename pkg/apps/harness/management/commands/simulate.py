"""Sample trajectories from an MDP file."""
from apps.core.exceptions import ConfigurationError
from apps.harness.management.base import HarnessCommand
from apps.mdp.utils import rollout


class Command(HarnessCommand):
    help = 'Sample trajectories and their truncated returns'

    def add_command_arguments(self, parser):
        parser.add_argument('--mdp', required=True, help='MDP JSON file')
        parser.add_argument('--theta', default=None,
                            help='Policy parameters (JSON list or file)')
        parser.add_argument('--horizon', type=int, required=True)
        parser.add_argument('--count', type=int, default=1)

    def run(self, **options):
        if options['count'] < 1:
            raise ConfigurationError('config: --count must be >= 1')
        mdp, policy, _ = self.load_problem(options, with_scalarization=False)
        batch, returns = rollout(
            mdp, policy, options['horizon'], options['count'],
            options['seed'] or 0, options['threads'],
        )
        self.emit({
            'horizon': options['horizon'],
            'seed': options['seed'] or 0,
            'states': batch.states.tolist(),
            'actions': batch.actions.tolist(),
            'returns': returns.tolist(),
            'mean_return': returns.mean(axis=0).tolist(),
        }, options['out'], filename='trajectories.json')
