"""Command-line front door.

Records go to ``--out`` or standard output as JSON lines; logs and the
summary table go to standard error. Exit status: 0 when every record
passed, 1 on a failed check, 2 on a usage error.
"""

import logging
import sys
from typing import Any, List, Optional

import typer
from pydantic import ValidationError

from .algorithms import AlgorithmName
from .config import get_settings
from .errors import QueryLabError
from .logs import STDERR, configure_logging
from .reports import CheckId, ReportWriter
from .suites import CLAIMS, ExperimentConfig, Problem, Suite, plan, run_suite

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="querylab",
    help="Query-complexity experiments: simulations, exact certificate checks and exact solvers.",
    no_args_is_help=True,
    add_completion=False,
)


# -------------------------
# Shared options
# -------------------------

FN = typer.Option(None, "--fn", help='Function spec, e.g. "xor[8] o gapmaj[9]"')
N = typer.Option(None, "--n", help="Outer size n")
M = typer.Option(None, "--m", help="Block size m")
TRIALS = typer.Option(None, "--trials", help="Trials per adversary, or samples for random sweeps")
SEED = typer.Option(None, "--seed", help="Master seed")
NOISE = typer.Option(None, "--noise", help="none | zeros | all:p | random:<seed> | list:p,...")
MAX_WIDTH = typer.Option(None, "--max-width", help="Largest conjunction width")
EPSILON = typer.Option(None, "--epsilon", help="Error bound as a rational, e.g. 1/3")
DEPTH = typer.Option(None, "--depth", help="Tree depth")
OUT = typer.Option(None, "--out", help="Record file (default: standard output)")
ALG = typer.Option(None, "--alg", help="Algorithm to simulate")
CHECK = typer.Option(None, "--check", help="Check id; repeat to select several")
PROBLEM = typer.Option(None, "--problem", help="Solver problem")
CONFIDENCE = typer.Option(None, "--confidence", help="Confidence level of error intervals")
WORKERS = typer.Option(None, "--workers", help="Worker processes for generic engine runs")
LOG_LEVEL = typer.Option(None, "--log-level", help="Logging level (default from settings)")


def _fail(e: Exception) -> None:
    # usage-class errors are ValueErrors
    if isinstance(e, ValueError):
        STDERR.print(f"[red]usage error:[/red] {e}")
        raise typer.Exit(2)
    STDERR.print(f"[red]check failed:[/red] {e}")
    raise typer.Exit(1)


def _execute(suite: Suite, log_level: Optional[str], **params: Any) -> None:
    configure_logging(log_level or get_settings().log_level)
    out = params.get("out")
    params["check"] = tuple(params.get("check") or ())
    try:
        config = ExperimentConfig(suite=suite, **{k: v for k, v in params.items() if v is not None})
        steps = plan(config)
    except (QueryLabError, ValidationError) as e:
        _fail(e)

    # the sink opens only once the plan resolved
    stream = open(out, "w", encoding="utf-8") if out else sys.stdout
    writer = ReportWriter(stream)
    try:
        summary = run_suite(config, writer, steps)
    except (QueryLabError, ValidationError) as e:
        _fail(e)
    finally:
        if out:
            stream.close()

    claims = CLAIMS if suite is Suite.REPRODUCE_ALL else None
    writer.render_table(STDERR, f"querylab {suite.value}", claims=claims)
    if not summary.ok:
        failing = sorted({row.check_id for row in writer.rows if not row.passed})
        logger.error("failed checks: %s", ", ".join(failing))
        raise typer.Exit(1)


# -------------------------
# Commands
# -------------------------

@app.command()
def simulate(
    alg: Optional[AlgorithmName] = ALG,
    fn: Optional[str] = FN,
    n: Optional[int] = N,
    m: Optional[int] = M,
    trials: Optional[int] = TRIALS,
    seed: Optional[int] = SEED,
    noise: Optional[str] = NOISE,
    confidence: Optional[float] = CONFIDENCE,
    workers: Optional[int] = WORKERS,
    out: Optional[str] = OUT,
    log_level: Optional[str] = LOG_LEVEL,
):
    """Monte Carlo error and query counts of an algorithm against adversaries"""
    _execute(Suite.SIMULATE, log_level, alg=alg, fn=fn, n=n, m=m, trials=trials, seed=seed, noise=noise,
             confidence=confidence, workers=workers, out=out)


@app.command("verify-certificates")
def verify_certificates(
    check: Optional[List[CheckId]] = CHECK,
    n: Optional[int] = N,
    m: Optional[int] = M,
    max_width: Optional[int] = MAX_WIDTH,
    trials: Optional[int] = TRIALS,
    seed: Optional[int] = SEED,
    out: Optional[str] = OUT,
    log_level: Optional[str] = LOG_LEVEL,
):
    """Exact checks of the slice, Fourier and case-analysis inequalities and certificate extraction"""
    _execute(Suite.VERIFY_CERTIFICATES, log_level, check=check, n=n, m=m, max_width=max_width, trials=trials,
             seed=seed, out=out)


@app.command()
def solve(
    problem: Optional[Problem] = PROBLEM,
    fn: Optional[str] = FN,
    epsilon: Optional[str] = EPSILON,
    depth: Optional[int] = DEPTH,
    max_width: Optional[int] = MAX_WIDTH,
    out: Optional[str] = OUT,
    log_level: Optional[str] = LOG_LEVEL,
):
    """Exact distributional, randomized, junta and certificate measures of a small function"""
    _execute(Suite.SOLVE, log_level, problem=problem, fn=fn, epsilon=epsilon, depth=depth, max_width=max_width,
             out=out)


@app.command("reproduce-all")
def reproduce_all(
    seed: int = typer.Option(7, "--seed", help="Master seed"),
    trials: Optional[int] = TRIALS,
    check: Optional[List[CheckId]] = CHECK,
    confidence: Optional[float] = CONFIDENCE,
    workers: Optional[int] = WORKERS,
    out: Optional[str] = OUT,
    log_level: Optional[str] = LOG_LEVEL,
):
    """Every acceptance check in a fixed order; --check restricts the battery"""
    _execute(Suite.REPRODUCE_ALL, log_level, seed=seed, trials=trials, check=check, confidence=confidence,
             workers=workers, out=out)


@app.command()
def run(
    suite: Suite = typer.Option(..., "--suite", help="Suite to run"),
    fn: Optional[str] = FN,
    n: Optional[int] = N,
    m: Optional[int] = M,
    trials: Optional[int] = TRIALS,
    seed: Optional[int] = SEED,
    noise: Optional[str] = NOISE,
    max_width: Optional[int] = MAX_WIDTH,
    epsilon: Optional[str] = EPSILON,
    depth: Optional[int] = DEPTH,
    out: Optional[str] = OUT,
    alg: Optional[AlgorithmName] = ALG,
    check: Optional[List[CheckId]] = CHECK,
    problem: Optional[Problem] = PROBLEM,
    confidence: Optional[float] = CONFIDENCE,
    workers: Optional[int] = WORKERS,
    log_level: Optional[str] = LOG_LEVEL,
):
    """Run any suite by name"""
    _execute(suite, log_level, fn=fn, n=n, m=m, trials=trials, seed=seed, noise=noise, max_width=max_width,
             epsilon=epsilon, depth=depth, out=out, alg=alg, check=check, problem=problem,
             confidence=confidence, workers=workers)
