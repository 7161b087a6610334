"""Fit a log-log slope to two columns of a CSV report."""
import csv
from pathlib import Path

from apps.core.exceptions import ConfigurationError
from apps.harness.management.base import HarnessCommand
from apps.harness.services import HarnessService


class Command(HarnessCommand):
    help = 'Least-squares slope of ln(y) against ln(x) from a CSV file'

    def add_command_arguments(self, parser):
        parser.add_argument('csv_path', help='CSV report with a header row')
        parser.add_argument('--x', default='B', help='x column')
        parser.add_argument('--y', default='bias_norm', help='y column')
        parser.add_argument('--include-excluded', action='store_true',
                            help='Keep rows flagged excluded_from_fit')

    def read_points(self, path, x_column, y_column, include_excluded):
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(
                'config: csv_path not found', path=str(path)
            )
        points = []
        with path.open(newline='') as handle:
            reader = csv.DictReader(handle)
            missing = {x_column, y_column} - set(reader.fieldnames or ())
            if missing:
                raise ConfigurationError(
                    f'config: CSV lacks columns {sorted(missing)}',
                    path=str(path),
                )
            for row in reader:
                if (not include_excluded
                        and row.get('excluded_from_fit') == 'True'):
                    continue
                if row[x_column] == '' or row[y_column] == '':
                    continue
                try:
                    points.append(
                        (float(row[x_column]), float(row[y_column]))
                    )
                except ValueError as exc:
                    raise ConfigurationError(
                        f'config: non-numeric value on line {reader.line_num}',
                        path=str(path),
                    ) from exc
        return points

    def run(self, **options):
        points = self.read_points(
            options['csv_path'], options['x'], options['y'],
            options['include_excluded'],
        )
        fit = HarnessService.fit_loglog_slope(points)
        self.emit(
            {'x': options['x'], 'y': options['y'], **fit.as_dict()},
            options['out'], filename='fit.json',
        )
