"""Command-line interface.

Exit codes: 0 success, 1 acceptance failure (a certification or rate
check did not meet its bound), 2 input error (bad config, file, or
arguments).
"""

from __future__ import annotations

import sys

import click

from .. import __version__, _kernels
from ..errors import CncrlError, InputError
from . import config as cfgmod
from .blackjack_eval import run_blackjack_eval
from .certify import run_oracle_cert
from .control import run_control
from .rate import run_rate_test

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_INPUT = 2


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="JSON experiment config")(fn)
    fn = click.option("--seed", type=int, default=None, help="override config seed")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="override output directory")(fn)
    fn = click.option("--trials", type=int, default=None, help="override trial count")(fn)
    return fn


def _resolve(config_path, experiment, seed, out, trials) -> dict:
    cfg = cfgmod.load_config(config_path)
    return cfgmod.resolve(cfg, experiment, seed=seed, out=out, trials=trials)


@click.group()
@click.version_option(version=__version__)
def main():
    """Compression-based policy evaluation and control experiments."""


@main.command("eval-blackjack")
@_common
def eval_blackjack(config_path, seed, out, trials):
    """Blackjack policy evaluation vs the Monte Carlo baseline."""
    cfg = _resolve(config_path, "eval-blackjack", seed, out, trials)
    path = run_blackjack_eval(cfg)
    click.echo(f"wrote {path}/curve.csv")


@main.command("control")
@_common
def control(config_path, seed, out, trials):
    """Epsilon-greedy control on MiniPong or an explicit MDP."""
    cfg = _resolve(config_path, "control", seed, out, trials)
    path = run_control(cfg)
    click.echo(f"wrote {path}/curve.csv")


@main.command("oracle-cert")
@_common
def oracle_cert(config_path, seed, out, trials):
    """Certify stationary-law values against the backup oracle."""
    cfg = _resolve(config_path, "oracle-cert", seed, out, trials)
    path, ok = run_oracle_cert(cfg)
    click.echo(f"wrote {path}/report.csv")
    if not ok:
        click.echo("certification FAILED: a gap exceeded 1e-9", err=True)
        sys.exit(EXIT_ACCEPTANCE)


@main.command("rate-test")
@_common
def rate_test(config_path, seed, out, trials):
    """Error-decay rate check with frequency estimators."""
    cfg = _resolve(config_path, "rate-test", seed, out, trials)
    path, ok = run_rate_test(cfg)
    click.echo(f"wrote {path}/ratios.csv")
    if not ok:
        click.echo("rate check FAILED: median ratio outside [1.5, 3.0]", err=True)
        sys.exit(EXIT_ACCEPTANCE)


@main.command("bench")
def bench():
    """Compare the compiled kernels against the pure-Python fallback."""
    from .bench import run_benchmark

    click.echo(f"active backend: {_kernels.backend_name()}")
    rows = run_benchmark()
    click.echo(f"{'kernel':<48}{'pure s':>10}{'compiled s':>12}{'speedup':>9}  agree")
    for name, pure_t, comp_t, speedup, agree in rows:
        click.echo(f"{name:<48}{pure_t:>10.4f}{comp_t:>12.4f}{speedup:>8.1f}x  {agree}")


def entry():
    try:
        main(standalone_mode=False)
    except click.exceptions.Exit as exc:  # --help, --version
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_INPUT)
    except InputError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except CncrlError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entry()
