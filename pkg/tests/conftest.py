"""Shared corpus builders plus the acceptance-summary hook."""

import numpy as np

from fgvi.gaussian import GaussianTarget

import acceptance_log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance pass/fail lines after the normal report.

    The per-criterion lines are printed inside the tests too, but pytest
    captures stdout of passing tests; this keeps them visible in every run.
    """
    if not acceptance_log.lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.lines:
        terminalreporter.write_line(line)


def random_spd_target(n: int, rng: np.random.Generator) -> GaussianTarget:
    """Random SPD covariance with a random mean.

    Wishart-style base with extra degrees of freedom plus a small ridge,
    then rescaled by lognormal per-coordinate deviations.  This keeps
    condition numbers roughly in 1e1..1e5, so comparisons at 1e-9
    relative against explicit inversion stay meaningful in double
    precision.
    """
    base = rng.standard_normal((n, n + 10))
    core = base @ base.T / (n + 10)
    core += 0.05 * (np.trace(core) / n) * np.eye(n)
    scale = np.exp(rng.normal(0.0, 1.0, size=n))
    covariance = core * np.outer(scale, scale)
    mean = rng.normal(0.0, 3.0, size=n)
    return GaussianTarget(mean=mean, covariance=covariance)


def target_corpus(n: int, count: int, base_seed: int = 0) -> list[GaussianTarget]:
    """Deterministic list of random targets; the seed folds in n."""
    rng = np.random.default_rng(base_seed * 1_000_003 + n)
    return [random_spd_target(n, rng) for _ in range(count)]
