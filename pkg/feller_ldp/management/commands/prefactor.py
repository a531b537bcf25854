import math

from feller_ldp.cli import float_list
from feller_ldp.model_core import Marginal
from feller_ldp.tails import (
    DEFAULT_PREFACTOR_TIMES,
    extract_prefactor,
    log_prefactor_v,
    prefactor_comparison,
)

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Extract the prefactor C(x) of the sharp tail formula from Fourier tails and compare it with the closed forms'
    name = 'prefactor'
    header = ('marginal', 'x', 'c_hat', 'exponent', 'remark_constant', 'closed_form', 'ratio')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        parser.add_argument('--x', type=float, required=True, help='Threshold x')
        parser.add_argument('--t-grid', type=float_list, default=list(DEFAULT_PREFACTOR_TIMES),
                            help='Comma separated times, at least 4 (default: 0.05,0.02,0.01,0.005)')

    def compute(self, config):
        p = config.params
        m = Marginal.parse(config.get('marginal'))
        x = config.get('x')
        fit = extract_prefactor(p, m, x, config.get('t_grid'))
        comparison = prefactor_comparison(p, m, x, prefactor=fit.c_hat)
        closed = math.exp(log_prefactor_v(p, x)) if m is Marginal.V else math.nan
        rows = [(m, x, fit.c_hat, fit.exponent, comparison.remark, closed, comparison.ratio)]
        return rows, (f"C_hat={fit.c_hat:.6g} exponent={fit.exponent:.4f} (1-mu={1 - p.mu:.4f}) "
                      f"remark constant={comparison.remark:.6g}")
