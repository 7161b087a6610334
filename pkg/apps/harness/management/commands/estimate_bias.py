"""Run a bias/variance campaign over a list of batch sizes."""
from apps.core.exceptions import ConfigurationError
from apps.harness.management.base import HarnessCommand
from apps.harness.services import HarnessService


def _batch_sizes(text):
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError as exc:
        raise ConfigurationError(
            f'config: --batch-sizes must be comma-separated integers, got '
            f'{text!r}'
        ) from exc


class Command(HarnessCommand):
    help = 'Measure gradient-estimator bias and variance against the oracle'

    def add_command_arguments(self, parser):
        parser.add_argument('--mdp', required=True, help='MDP JSON file')
        parser.add_argument('--scalarization', required=True,
                            help='Scalarization block (JSON or file)')
        parser.add_argument('--theta', default=None,
                            help='Policy parameters (JSON list or file)')
        parser.add_argument('--horizon', type=int, required=True)
        parser.add_argument('--estimator', choices=['empirical', 'mlmc'],
                            default='empirical')
        parser.add_argument('--batch-sizes', required=True,
                            help='Comma-separated B (or B_max) values')
        parser.add_argument('--mode', choices=['enumerate', 'montecarlo'],
                            default='enumerate')
        parser.add_argument('--replications', type=int, default=None)
        parser.add_argument('--uncoupled-base', action='store_true',
                            help='Draw a fresh MLMC base trajectory')
        parser.add_argument('--budget', type=int, default=None,
                            help='Enumeration budget')

    def run(self, **options):
        mdp, policy, f = self.load_problem(options)
        report = HarnessService.measure_bias_variance(
            mdp, policy.theta, f, options['horizon'], options['estimator'],
            _batch_sizes(options['batch_sizes']),
            replications=options['replications'],
            mode=options['mode'],
            seed=options['seed'] or 0,
            coupled_base=not options['uncoupled_base'],
            budget=options['budget'],
            threads=options['threads'],
        )
        if options['out'] is None:
            self.emit(report.as_dict())
            return
        directory = HarnessService.write_campaign_report(
            report, options['out']
        )
        self.stdout.write(f'Wrote campaign report to {directory}')
