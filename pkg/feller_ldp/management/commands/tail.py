from feller_ldp.model_core import Marginal
from feller_ldp.tails import Method, tail_probability

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Tail probability P(M_t >= x) by the sharp formula, the exact Gamma law, Fourier inversion or Monte Carlo'
    name = 'tail'
    header = ('t', 'x', 'method', 'p', 'log_p', 'error')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        self.add_x_arguments(parser, required=True)
        self.add_t_arguments(parser, required=True)
        parser.add_argument('--method', type=str, default='fourier',
                            choices=['sharp', 'gamma-exact', 'fourier', 'monte-carlo'],
                            help='Evaluation method (default: fourier)')
        parser.add_argument('--prefactor', type=float,
                            help='Prefactor C(x) for the sharp formula on X (extracted when omitted)')
        self.add_mc_arguments(parser)

    def compute(self, config):
        m = Marginal.parse(config.get('marginal'))
        method = Method.parse(config.get('method'))
        mc = self.mc_config(config) if method is Method.MONTE_CARLO else None
        rows = []
        for x in self.x_values(config):
            for t in self.t_values(config):
                estimate = tail_probability(config.params, m, x, t, method,
                                            mc_config=mc, prefactor=config.get('prefactor'))
                rows.append((t, x, method, estimate.p, estimate.log_p, estimate.error))
        t, x, _, p, log_p, _ = rows[-1]
        return rows, f"P({m.value}_{t:g} >= {x:g}) = {p:.6e} (log {log_p:.6f}, {method.value})"
