from pathlib import Path

from feller_ldp.cli import open_output, write_csv
from feller_ldp.model_core import Marginal
from feller_ldp.montecarlo import check_expected_hits, draw_samples, tail_mc

from ._base import FellerCommand


class Command(FellerCommand):
    help = 'Monte Carlo estimate of P(M_t >= x) with binomial standard error'
    name = 'mc'
    header = ('marginal', 'x', 't', 'p_hat', 'std_err', 'n_paths', 'hits')

    def add_command_arguments(self, parser):
        self.add_marginal_argument(parser)
        parser.add_argument('--x', type=float, required=True, help='Threshold x')
        parser.add_argument('--t', type=float, required=True, help='Time horizon t')
        self.add_mc_arguments(parser)
        parser.add_argument('--dump', type=str, help='Write the raw samples as CSV (one row per path: X, V)')

    def compute(self, config):
        p = config.params
        m = Marginal.parse(config.get('marginal'))
        x, t = config.get('x'), config.get('t')
        cfg = self.mc_config(config)

        check_expected_hits(p, m, x, t, cfg)
        x_draws, v_draws = draw_samples(p, m, t, cfg)
        estimate = tail_mc(p, m, x, t, cfg, samples=v_draws if m is Marginal.V else x_draws)

        if config.get('dump'):
            xs = x_draws.tolist() if x_draws is not None else [float('nan')] * len(v_draws)
            with open_output(Path(config.get('dump')), self.stdout) as stream:
                write_csv(stream, ('X', 'V'), zip(xs, v_draws.tolist()))

        rows = [(m, x, t, estimate.p_hat, estimate.std_err, estimate.n_paths, estimate.hits)]
        return rows, f"P({m.value}_{t:g} >= {x:g}) ~ {estimate.p_hat:.6g} +/- {estimate.std_err:.2g} ({estimate.hits} hits)"
