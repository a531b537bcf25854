import json
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from feller_ldp.cli import RunConfig, float_list, open_output, write_csv
from feller_ldp.exceptions import NumericalError, ValidationError
from feller_ldp.montecarlo import McConfig

VALIDATION_EXIT = 2
NUMERICAL_EXIT = 3


class FellerCommand(BaseCommand):
    """Base for the CSV-emitting commands.

    Subclasses set ``name`` and ``header`` and implement ``compute(config)``,
    returning the CSV rows and a one-line summary.
    """
    name = ''
    header = ()

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.logger = logging.getLogger('feller_ldp.commands')

    def add_arguments(self, parser):
        parser.add_argument(
            '--params',
            type=str,
            help='JSON file with keys a, b, xi, rho (default: params/p1.json)'
        )
        parser.add_argument(
            '--out',
            type=str,
            help='Write the CSV to this file instead of stdout'
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    # shared flag groups

    def add_marginal_argument(self, parser):
        parser.add_argument('--marginal', type=str, choices=['X', 'V', 'x', 'v'], default='X',
                            help='Marginal: X (log-price) or V (variance), default X')

    def add_x_arguments(self, parser, required=False):
        group = parser.add_mutually_exclusive_group(required=required)
        group.add_argument('--x', type=float, help='Threshold x')
        group.add_argument('--x-grid', type=float_list, help='Comma separated thresholds')

    def add_t_arguments(self, parser, required=False):
        group = parser.add_mutually_exclusive_group(required=required)
        group.add_argument('--t', type=float, help='Time horizon t')
        group.add_argument('--t-grid', type=float_list, help='Comma separated times')

    def add_mc_arguments(self, parser):
        defaults = settings.FELLER_LDP
        parser.add_argument('--seed', type=int, default=0, help='Root seed (default: 0)')
        parser.add_argument('--paths', type=int, default=defaults['MC_PATHS'],
                            help=f"Number of Monte Carlo paths (default: {defaults['MC_PATHS']})")
        parser.add_argument('--steps', type=int, default=defaults['MC_STEPS'],
                            help=f"Time steps per X path (default: {defaults['MC_STEPS']})")
        parser.add_argument('--streams', type=int, default=defaults['MC_STREAMS'],
                            help=f"Independent random streams (default: {defaults['MC_STREAMS']})")

    @staticmethod
    def x_values(config):
        return config.get('x_grid') or ([config.get('x')] if config.get('x') is not None else [])

    @staticmethod
    def t_values(config):
        return config.get('t_grid') or ([config.get('t')] if config.get('t') is not None else [])

    @staticmethod
    def mc_config(config):
        return McConfig(
            n_paths=config.get('paths'),
            n_steps=config.get('steps'),
            seed=config.get('seed'),
            stream_count=config.get('streams'),
            workers=settings.FELLER_LDP['MC_WORKERS'],
        )

    def compute(self, config):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            config = RunConfig.from_options(self.name, options)
            rows, summary = self.compute(config)
            with open_output(config.out, self.stdout) as stream:
                count = write_csv(stream, self.header, rows)
            self.logger.info(f"{self.name}: {count} rows")
            (self.stdout if config.out else self.stderr).write(summary)

        except (ValidationError, OSError, json.JSONDecodeError) as e:
            raise CommandError(f'Command failed: {e}', returncode=VALIDATION_EXIT)
        except NumericalError as e:
            raise CommandError(f'Command failed: {e}', returncode=NUMERICAL_EXIT)
