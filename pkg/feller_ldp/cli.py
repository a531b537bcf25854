"""Command-line plumbing shared by the management commands.

Every subcommand is a Django management command of the same name, so
``python manage.py rate --marginal X --x 0.1`` and ``run(['rate', ...])`` are
the same invocation.
"""

from __future__ import annotations

import argparse
import csv
import enum
import math
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, TextIO

from feller_ldp.model_core import ModelParams

COMMANDS = ('rate', 'domain', 'saddle', 'tail', 'converge', 'prefactor', 'variational', 'mc', 'steepness')
FLOAT_FORMAT = '%.17g'


@dataclass(frozen=True)
class RunConfig:
    """Everything one command run depends on."""
    command: str
    params: ModelParams
    options: dict = field(default_factory=dict)
    out: Optional[Path] = None

    @classmethod
    def from_options(cls, command: str, options: dict) -> 'RunConfig':
        params = load_params(options['params'])
        out = Path(options['out']) if options.get('out') else None
        ignored = {'params', 'out', 'verbosity', 'settings', 'pythonpath', 'traceback',
                   'no_color', 'force_color', 'skip_checks'}
        values = {key: value for key, value in options.items() if key not in ignored}
        return cls(command=command, params=params, options=values, out=out)

    def get(self, key: str, default=None):
        value = self.options.get(key)
        return default if value is None else value


def default_params_path() -> Path:
    from django.conf import settings
    return Path(settings.FELLER_LDP['DEFAULT_PARAMS'])


def load_params(path) -> ModelParams:
    return ModelParams.from_file(path or default_params_path())


def float_list(text: str) -> list[float]:
    """argparse type for comma separated floats such as ``0.1,0.05,0.02``."""
    try:
        values = [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    count = 0
    for row in rows:
        writer.writerow([format_value(value) for value in row])
        count += 1
    return count


@contextmanager
def open_output(path: Optional[Path], fallback: TextIO):
    if path is None:
        yield fallback
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as handle:
        yield handle


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit status (0, 2 validation, 3 numerical)."""
    from django.core.management import execute_from_command_line

    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in COMMANDS:
        sys.stderr.write(f"usage: feller-ldp {{{','.join(COMMANDS)}}} [options]\n")
        return 2
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ldplab.settings')
    try:
        execute_from_command_line(['feller-ldp', *argv])
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return 0
