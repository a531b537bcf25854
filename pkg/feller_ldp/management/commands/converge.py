from django.core.management.base import CommandError

from feller_ldp.cli import float_list
from feller_ldp.model_core import Marginal
from feller_ldp.tails import Method, extrapolate_rate, ldp_convergence

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Convergence of -t log P(M_t >= x) to the rate function over a grid of times'
    name = 'converge'
    header = ('t', 'scaled_log_p', 'rate', 'gap')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        parser.add_argument('--x', type=float, required=True, help='Threshold x')
        parser.add_argument('--t-grid', type=float_list, required=True, help='Comma separated times')
        parser.add_argument('--method', type=str, default='fourier',
                            choices=['gamma-exact', 'fourier', 'monte-carlo'],
                            help='Evaluation method (default: fourier)')
        self.add_mc_arguments(parser)

    def compute(self, config):
        m = Marginal.parse(config.get('marginal'))
        method = Method.parse(config.get('method'))
        if method is Method.GAMMA_EXACT and m is not Marginal.V:
            raise CommandError('--method gamma-exact needs --marginal V', returncode=2)
        mc = self.mc_config(config) if method is Method.MONTE_CARLO else None
        table = ldp_convergence(config.params, m, config.get('x'), config.get('t_grid'), method, mc_config=mc)
        rows = [(row.t, row.scaled_log_p, row.rate, row.gap) for row in table]
        summary = f"final gap {table[-1].gap:.6g} at t={table[-1].t:g}"
        if len(table) >= 3:
            summary += f"; extrapolated limit {extrapolate_rate(table):.6f} vs rate {table[-1].rate:.6f}"
        return rows, summary
