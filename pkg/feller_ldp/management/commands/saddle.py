import math

from feller_ldp.exceptions import OutsideSupport
from feller_ldp.model_core import Marginal
from feller_ldp.rate_functions import alpha_coeffs
from feller_ldp.saddlepoint import saddle

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Saddlepoint u*_M(x, t) with its residual and the limits alpha_0, alpha_1'
    name = 'saddle'
    header = ('marginal', 'x', 't', 'u_star', 'residual', 'alpha0', 'alpha1')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        self.add_x_arguments(parser, required=True)
        self.add_t_arguments(parser, required=True)

    def compute(self, config):
        m = Marginal.parse(config.get('marginal'))
        rows = []
        for x in self.x_values(config):
            try:
                a0, a1 = alpha_coeffs(config.params, m, x)
            except OutsideSupport:
                # x = 0 for X has a saddlepoint but no limit coefficients
                a0, a1 = math.nan, math.nan
            for t in self.t_values(config):
                result = saddle(config.params, m, x, t)
                rows.append((m, x, t, result.u_star, result.residual, a0, a1))
        last = rows[-1]
        return rows, f"u*_{m.value}({last[1]:g}, {last[2]:g}) = {last[3]:.10g} (residual {last[4]:.2e})"
