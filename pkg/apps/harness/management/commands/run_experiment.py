"""Execute a run config and write its JSON and CSV reports."""
from apps.harness.management.base import HarnessCommand
from apps.harness.services import HarnessService


class Command(HarnessCommand):
    help = 'Run the algorithm named in a run config'
    algorithm = None

    def add_command_arguments(self, parser):
        parser.add_argument('config', help='Run config JSON file')

    def run(self, **options):
        report, directory = HarnessService.run_experiment(
            options['config'],
            threads=options['threads'],
            out=options['out'],
            seed=options['seed'],
            algorithm=self.algorithm,
        )
        self.stdout.write(
            f'{report.algorithm}: {len(report.iterations)} iterations, '
            f'{report.total_trajectories} trajectories, reports in '
            f'{directory}'
        )
