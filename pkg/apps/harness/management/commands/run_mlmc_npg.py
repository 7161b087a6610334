"""Run MLMC NPG from a run config."""
from .run_experiment import Command as ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run MLMC NPG (config algorithm must be "mlmc_npg")'
    algorithm = 'mlmc_npg'
