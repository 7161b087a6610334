"""Print the exact quantities of one (mdp, theta, f) triple."""
from apps.harness.management.base import HarnessCommand
from apps.oracle.utils import exact_report


class Command(HarnessCommand):
    help = 'Print exact returns, gradients, Fisher spectrum and NPG direction'

    def add_command_arguments(self, parser):
        parser.add_argument('--mdp', required=True, help='MDP JSON file')
        parser.add_argument('--scalarization', required=True,
                            help='Scalarization block (JSON or file)')
        parser.add_argument('--theta', default=None,
                            help='Policy parameters (JSON list or file)')
        parser.add_argument('--horizon', type=int, default=None,
                            help='Also report truncated-horizon values')

    def run(self, **options):
        mdp, policy, f = self.load_problem(options)
        self.emit(
            exact_report(mdp, policy, f, options['horizon']),
            options['out'], filename='oracle.json',
        )
