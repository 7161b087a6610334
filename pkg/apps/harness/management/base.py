"""Shared plumbing for the harness management commands."""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.core.exceptions import ConfigurationError, MorlNpgError
from apps.core.utils.files import (
    parse_json_text,
    read_json,
    render_json,
    write_atomic,
)
from apps.mdp.services import MdpService
from apps.policy.domain import PolicyParams
from apps.scalarization.services import ScalarizationService

logger = logging.getLogger(__name__)


class HarnessCommand(BaseCommand):
    """
    Base command with the global ``--seed``, ``--threads`` and ``--out``
    flags.

    Subclasses implement ``run(**options)``. A MorlNpgError becomes a JSON
    error record on stderr and a CommandError carrying the error's exit
    code.
    """

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=None,
                            help='Master seed (overrides any config seed)')
        parser.add_argument('--threads', type=int, default=None,
                            help='Worker threads for sampling')
        parser.add_argument('--out', default=None,
                            help='Output file or directory')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except MorlNpgError as exc:
            logger.error('%s failed: %s', self.command_name, exc.message)
            self.stderr.write(render_json(exc.as_record()).decode('utf-8'))
            raise CommandError(exc.message, returncode=exc.exit_code) from exc

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def run(self, **options):
        raise NotImplementedError

    def emit(self, data, out=None, filename='report.json'):
        """Write ``data`` as JSON to ``out`` or stdout."""
        payload = render_json(data)
        if out is None:
            self.stdout.write(payload.decode('utf-8'))
            return None
        path = Path(out)
        if path.suffix != '.json':
            path = path / filename
        write_atomic(path, payload)
        self.stdout.write(f'Wrote {path}')
        return path

    @staticmethod
    def load_json_option(value, label):
        """A JSON option given inline or as a path to a JSON file."""
        if value is None:
            return None
        if Path(value).is_file():
            return read_json(value, label=label)
        return parse_json_text(value, label=label)

    @staticmethod
    def load_problem(options, with_scalarization=True):
        """
        Load the MDP, policy and (optionally) scalarization named by the
        ``--mdp``, ``--theta`` and ``--scalarization`` options.

        Returns:
            tuple: (TabularMdp, PolicyParams, Scalarization or None)
        """
        mdp = MdpService.load(options['mdp'])
        theta = HarnessCommand.load_json_option(options.get('theta'), 'theta')
        policy = PolicyParams.for_mdp(mdp, theta)
        f = None
        if with_scalarization:
            block = HarnessCommand.load_json_option(
                options.get('scalarization'), 'scalarization'
            )
            if block is None:
                raise ConfigurationError('config: --scalarization is required')
            f = ScalarizationService.build(
                block, mdp.discount, mdp.n_objectives
            )
        return mdp, policy, f
