"""Measure the inner-loop error conditions against the oracle."""
from apps.harness.management.base import HarnessCommand
from apps.harness.services import HarnessService


class Command(HarnessCommand):
    help = 'Measure Fisher bias/variance, spectrum bounds and R_0'

    def add_command_arguments(self, parser):
        parser.add_argument('--mdp', required=True, help='MDP JSON file')
        parser.add_argument('--scalarization', required=True,
                            help='Scalarization block (JSON or file)')
        parser.add_argument('--theta', default=None,
                            help='Policy parameters (JSON list or file)')
        parser.add_argument('--horizon', type=int, required=True)
        parser.add_argument('--batch-size', type=int, default=1)
        parser.add_argument('--replications', type=int, default=10000)
        parser.add_argument('--unnormalized', action='store_true',
                            help='Drop the (1 - gamma) Fisher factor')

    def run(self, **options):
        mdp, policy, f = self.load_problem(options)
        diagnostics = HarnessService.measure_inner_loop(
            mdp, policy.theta, f, options['horizon'], options['batch_size'],
            options['replications'], seed=options['seed'] or 0,
            normalize=not options['unnormalized'],
            threads=options['threads'],
        )
        self.emit(
            diagnostics.as_dict(), options['out'], filename='inner_loop.json'
        )
