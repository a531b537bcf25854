from feller_ldp.model_core import Marginal, domain_bounds

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Effective domain (lower, upper) of Lambda_M(., t); t = 0 gives the limiting domain'
    name = 'domain'
    header = ('marginal', 't', 'lower', 'upper')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        self.add_t_arguments(parser)

    def compute(self, config):
        m = Marginal.parse(config.get('marginal'))
        rows = []
        for t in self.t_values(config) or [0.0]:
            bounds = domain_bounds(config.params, m, t)
            rows.append((m, t, bounds.lower, bounds.upper))
        _, t, lower, upper = rows[-1]
        return rows, f"D^{m.value} at t={t:g}: ({lower:.6f}, {upper:.6f})"
