"""Run vanilla NPG from a run config."""
from .run_experiment import Command as ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run vanilla NPG (config algorithm must be "npg")'
    algorithm = 'npg'
