from django.core.management.base import CommandError

from feller_ldp.model_core import Marginal
from feller_ldp.rate_functions import fw_rate, rate

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Rate function Lambda*_M(x); with --v0, the Freidlin-Wentzell rate of V started at v0'
    name = 'rate'
    header = ('marginal', 'x', 'rate')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        self.add_x_arguments(parser, required=True)
        parser.add_argument('--v0', type=float, help='Initial variance for the Freidlin-Wentzell rate (V only)')

    def compute(self, config):
        m = Marginal.parse(config.get('marginal'))
        v0 = config.get('v0')
        if v0 is not None and m is not Marginal.V:
            raise CommandError('--v0 only applies to --marginal V', returncode=2)
        rows = []
        for x in self.x_values(config):
            value = fw_rate(config.params, v0, x) if v0 is not None else rate(config.params, m, x)
            rows.append((m, x, value.value))
        last = rows[-1]
        return rows, f"Lambda*_{m.value}({last[1]:g}) = {last[2]:.6f}"
