from feller_ldp.cli import float_list
from feller_ldp.model_core import Marginal
from feller_ldp.rate_functions import steepness_report

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Steepness diagnostic of the limiting cgf and max |Lambda_M(u, t)| on a compact of its domain'
    name = 'steepness'
    header = ('marginal', 't', 'lower', 'upper', 'lower_slope', 'upper_slope', 'essentially_smooth',
              'max_abs_lambda')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        parser.add_argument('--t-grid', type=float_list, default=[0.1, 0.05, 0.02, 0.01],
                            help='Comma separated times (default: 0.1,0.05,0.02,0.01)')

    def compute(self, config):
        m = Marginal.parse(config.get('marginal'))
        report = steepness_report(config.params, m, config.get('t_grid'))
        lower_slope, upper_slope = report.boundary_slopes
        rows = [
            (m, t, report.domain.lower, report.domain.upper, lower_slope, upper_slope,
             report.essentially_smooth, residual)
            for t, residual in report.limit_residuals
        ]
        return rows, (f"{m.value}: boundary slopes ({lower_slope:g}, {upper_slope:g}), "
                      f"essentially smooth: {report.essentially_smooth}")
