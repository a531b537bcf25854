import math
from pathlib import Path

from django.conf import settings

from feller_ldp.cli import open_output, write_csv
from feller_ldp.rate_functions import fw_rate, rate_v
from feller_ldp.variational import minimize_action

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Minimise the discretised Freidlin-Wentzell action from v0 to x and compare with the closed form'
    name = 'variational'
    header = ('v0', 'x', 'n', 'action', 'direct_action', 'closed_form', 'limit', 'gap')

    def add_command_arguments(self, parser):
        self.add_x_arguments(parser, required=True)
        parser.add_argument('--v0', type=float, default=0.0, help='Initial variance (default: 0)')
        parser.add_argument('--n', type=int, default=settings.FELLER_LDP['VARIATIONAL_GRID'],
                            help=f"Grid intervals on [0, 1] (default: {settings.FELLER_LDP['VARIATIONAL_GRID']})")
        parser.add_argument('--path-out', type=str, help='Write the minimising path of the last x as CSV (t, phi)')

    def compute(self, config):
        p, v0, n = config.params, config.get('v0'), config.get('n')
        rows, last = [], None
        for x in self.x_values(config):
            last = minimize_action(p, v0, x, n)
            limit = rate_v(p, x).value
            gap = abs(last.value - limit) if math.isfinite(limit) else 0.0
            rows.append((v0, x, n, last.value, last.direct_value, fw_rate(p, v0, x).value, limit, gap))

        path_out = config.get('path_out')
        if path_out and last.minimizer is not None:
            with open_output(Path(path_out), self.stdout) as stream:
                write_csv(stream, ('t', 'phi', 'phi_direct'),
                          zip(last.minimizer.knots.tolist(), last.minimizer.values.tolist(),
                              last.direct_minimizer.values.tolist()))

        _, x, _, value, direct, closed, _, _ = rows[-1]
        return rows, f"action({v0:g} -> {x:g}) = {value:.8f} (direct {direct:.8f}, closed form {closed:.8f})"
