"""Extremal envelopes of the entropy-gap pieces over a condition-number class.

All bounds range over correlation-like spectra: eigenvalue profiles with a
fixed extreme-eigenvalue ratio R = lambda_1 / lambda_n and trace n.  Over
that class the extrema of sum(1/lambda_i), sum(log lambda_i) and the joint
divergence objective are attained by two-level profiles with at most one
eigenvalue strictly between the edges (or, for the minimizers, with all
interior eigenvalues equal), so each bound reduces to enumerating the
split index k and evaluating a one-dimensional convex objective at the
endpoints of its feasible interval.  Infeasible candidates, such as
profiles whose extreme ratio degenerates below R, are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "EigenProfile",
    "BoundsReport",
    "TraceShrinkageBounds",
    "bound_log_det_S",
    "bound_log_det_C",
    "bound_trace_S",
    "bound_kl_joint",
    "bounds_report",
    "envelope_sweep",
]

_PROFILE_RTOL = 1e-10
_EDGE_RTOL = 1e-9


@dataclass(frozen=True)
class EigenProfile:
    """An eigenvalue profile in the candidate class: sorted descending,
    trace n, extreme ratio equal to ``condition_ratio``."""

    values: np.ndarray
    condition_ratio: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError(f"values must be a vector of length >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v[-1] <= 0.0:
            raise ValueError("eigenvalues must be finite and positive")
        if np.any(np.diff(v) > 0.0):
            raise ValueError("eigenvalues must be sorted descending")
        if self.condition_ratio < 1.0:
            raise ValueError(f"condition ratio must be >= 1, got {self.condition_ratio!r}")
        if abs(v[0] - self.condition_ratio * v[-1]) > _PROFILE_RTOL * v[0]:
            raise ValueError(
                f"extreme ratio {v[0] / v[-1]!r} does not match "
                f"condition ratio {self.condition_ratio!r}"
            )
        n = v.size
        total = float(np.sum(v))
        if abs(total - n) > _PROFILE_RTOL * n:
            raise ValueError(f"eigenvalues must sum to n={n}, got {total!r}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


class TraceShrinkageBounds(NamedTuple):
    lower: float
    upper: float
    lower_profile: EigenProfile
    upper_profile: EigenProfile


def _check_n_ratio(n: int, condition_ratio: float, min_n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < min_n:
        raise ValueError(f"n must be an integer >= {min_n}, got {n!r}")
    if not (math.isfinite(condition_ratio) and condition_ratio >= 1.0):
        raise ValueError(f"condition ratio must be >= 1, got {condition_ratio!r}")


def _split_values(n: int, ratio: float, k: int, lam_n: float) -> np.ndarray | None:
    """Profile with k-1 eigenvalues at ratio*lam_n, one free eigenvalue
    fixed by the trace, and n-k at lam_n; None when it leaves the class."""
    lam_1 = ratio * lam_n
    lam_k = n - ((k - 1) * ratio + (n - k)) * lam_n
    # At interval endpoints lam_k reproduces an edge value through a second
    # float path whose rounding, divided by a tiny lam_n, can drift the
    # extreme ratio at large R; snap exactly onto the matching edge.
    if abs(lam_k - lam_1) <= _EDGE_RTOL * lam_1:
        lam_k = lam_1
    elif abs(lam_k - lam_n) <= _EDGE_RTOL * lam_1:
        lam_k = lam_n
    values = np.empty(n)
    values[: k - 1] = lam_1
    values[k - 1] = lam_k
    values[k:] = lam_n
    values[::-1].sort()
    if values[-1] <= 0.0:
        return None
    if abs(values[0] - ratio * values[-1]) > _EDGE_RTOL * values[0]:
        return None
    return values


def _max_inverse_sum(n: int, ratio: float) -> tuple[float, EigenProfile]:
    """Maximum of sum(1/lambda_i) over the class.

    For each split k the objective is convex in lam_n on its feasible
    interval, so only the interval endpoints can attain the maximum.
    """
    best_value = -math.inf
    best_values = None
    for k in range(1, n + 1):
        lo = n / (ratio * k + n - k)
        hi = n / (ratio * (k - 1) + n - k + 1)
        if lo > hi:
            continue
        for lam_n in (lo, hi) if hi > lo else (lo,):
            values = _split_values(n, ratio, k, lam_n)
            if values is None:
                continue
            value = float(np.sum(1.0 / values))
            if value > best_value:
                best_value = value
                best_values = values
    if best_values is None:
        raise ValueError(f"no feasible profile for n={n}, condition ratio {ratio!r}")
    return best_value, EigenProfile(values=best_values, condition_ratio=ratio)


def bound_log_det_S(n: int, condition_ratio: float) -> tuple[float, EigenProfile]:
    """Upper bound on the shrinkage log-determinant log|S| over all
    correlation matrices with the given extreme-eigenvalue ratio.

    Uses log|S| <= n log(F/n) where F is the class maximum of
    sum(1/lambda_i); returns the bound and its maximizing profile.
    """
    _check_n_ratio(n, condition_ratio, min_n=2)
    f_max, profile = _max_inverse_sum(n, condition_ratio)
    return n * math.log(f_max / n), profile


def bound_log_det_C(n: int, condition_ratio: float) -> tuple[float, EigenProfile]:
    """Upper bound on the correlation log-determinant log|C| over the class.

    The maximizer pins one eigenvalue at each edge, 2/(1+R) and 2R/(1+R),
    and holds every interior eigenvalue at 1; the stationary point always
    lies inside its feasible interval for n >= 3.  The bound is never
    positive and is exactly zero at R = 1.
    """
    _check_n_ratio(n, condition_ratio, min_n=1)
    ratio = condition_ratio
    if n == 1:
        return 0.0, EigenProfile(values=np.ones(1), condition_ratio=1.0)
    lam_n = 2.0 / (1.0 + ratio)
    lam_1 = ratio * lam_n
    if n == 2:
        values = np.array([lam_1, lam_n])
    else:
        lo = n / (1.0 + ratio * (n - 1))
        hi = n / (n - 1.0 + ratio)
        assert lo - 1e-12 <= lam_n <= hi + 1e-12, "stationary point left its interval"
        lam_mid = (n - (1.0 + ratio) * lam_n) / (n - 2)
        values = np.concatenate([[lam_1], np.full(n - 2, lam_mid), [lam_n]])
    values[::-1].sort()
    value = float(np.sum(np.log(values)))
    return value, EigenProfile(values=values, condition_ratio=ratio)


def bound_trace_S(n: int, condition_ratio: float) -> TraceShrinkageBounds:
    """Two-sided bounds on trace(S) = sum(1/lambda_i) over the class.

    The upper bound reuses the maximizer of the shrinkage bound.  The
    lower bound's profile holds all interior eigenvalues equal; its
    objective is convex in lam_n, minimized either at a stationary root of

        (R(n-2)^2 - (1+R)^2) lam^2 + 2n(1+R) lam - n^2 = 0

    or at an endpoint of the feasible interval, whichever evaluates lowest.
    """
    _check_n_ratio(n, condition_ratio, min_n=2)
    ratio = condition_ratio
    upper, upper_profile = _max_inverse_sum(n, ratio)
    if n == 2:
        return TraceShrinkageBounds(upper, upper, upper_profile, upper_profile)

    lo = n / (ratio * (n - 1) + 1.0)
    hi = n / (ratio + n - 1.0)
    a = ratio * (n - 2) ** 2 - (1.0 + ratio) ** 2
    candidates = [lo, hi]
    if abs(a) < 1e-12:
        # Degenerate leading coefficient: the stationary equation is linear.
        candidates.append(n / (2.0 * (1.0 + ratio)))
    else:
        b = 2.0 * n * (1.0 + ratio)
        sq = 2.0 * n * (n - 2) * math.sqrt(ratio)
        candidates.extend([(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)])

    best_value = math.inf
    best_values = None
    for lam_n in candidates:
        if not lo - 1e-12 <= lam_n <= hi + 1e-12:
            continue
        lam_n = min(max(lam_n, lo), hi)
        lam_mid = (n - (1.0 + ratio) * lam_n) / (n - 2)
        values = np.concatenate([[ratio * lam_n], np.full(n - 2, lam_mid), [lam_n]])
        values[::-1].sort()
        value = float(np.sum(1.0 / values))
        if value < best_value:
            best_value = value
            best_values = values
    lower_profile = EigenProfile(values=best_values, condition_ratio=ratio)
    return TraceShrinkageBounds(best_value, upper, lower_profile, upper_profile)


def bound_kl_joint(n: int, condition_ratio: float) -> tuple[float, EigenProfile]:
    """Upper bound on the whole entropy gap (equivalently KL(q || p)) over
    the class, tighter than summing the two separate bounds.

    Works in the reciprocal weights omega_i = (1/lambda_i) / sum(1/lambda_j),
    which form the same kind of ratio-R class with unit sum; each split k
    leaves a convex one-dimensional objective whose maximum sits at an
    endpoint.  The maximizing weights are mapped back to an eigenvalue
    profile with trace n.
    """
    _check_n_ratio(n, condition_ratio, min_n=2)
    ratio = condition_ratio
    if ratio == 1.0:
        # Unit ratio pins every eigenvalue at 1; skip the float arithmetic
        # so the bound is exactly zero.
        return 0.0, EigenProfile(values=np.ones(n), condition_ratio=1.0)
    best_value = -math.inf
    best_omegas = None
    for k in range(1, n + 1):
        lo = 1.0 / (k - 1 + ratio * (n - k + 1))
        hi = 1.0 / (k + ratio * (n - k))
        if lo > hi:
            continue
        for w_1 in (lo, hi) if hi > lo else (lo,):
            w_k = 1.0 - (k - 1 + ratio * (n - k)) * w_1
            # Same endpoint degeneracy as _split_values: snap w_k onto the
            # edge it reproduces so the ratio check stays exact at large R.
            w_top = ratio * w_1
            if abs(w_k - w_1) <= _EDGE_RTOL * w_top:
                w_k = w_1
            elif abs(w_k - w_top) <= _EDGE_RTOL * w_top:
                w_k = w_top
            omegas = np.empty(n)
            omegas[: k - 1] = w_1
            omegas[k - 1] = w_k
            omegas[k:] = ratio * w_1
            omegas.sort()
            if omegas[0] <= 0.0:
                continue
            if abs(omegas[-1] - ratio * omegas[0]) > _EDGE_RTOL * omegas[-1]:
                continue
            value = -float(np.sum(np.log(omegas)))
            if value > best_value:
                best_value = value
                best_omegas = omegas
    if best_omegas is None:
        raise ValueError(f"no feasible profile for n={n}, condition ratio {ratio!r}")
    bound = 0.5 * (best_value - n * math.log(n))
    scale = float(np.sum(1.0 / best_omegas)) / n
    values = np.sort(1.0 / (best_omegas * scale))[::-1]
    return bound, EigenProfile(values=values, condition_ratio=ratio)


@dataclass(frozen=True)
class BoundsReport:
    """All envelope values at one (n, condition ratio) point.

    ``maximizers`` maps each bound name to the profile attaining it.  The
    joint KL bound never exceeds the sum of the two separate bounds, and
    the correlation bound never exceeds zero; both facts are enforced.
    """

    n: int
    condition_ratio: float
    upper_log_det_S: float
    upper_log_det_C: float
    lower_trace_S: float
    upper_trace_S: float
    joint_kl_upper: float
    maximizers: dict[str, EigenProfile] = field(repr=False)

    def __post_init__(self):
        if self.upper_log_det_C > 1e-12:
            raise ValueError(
                f"correlation bound must be non-positive, got {self.upper_log_det_C!r}"
            )
        if self.lower_trace_S > self.upper_trace_S + 1e-9:
            raise ValueError("trace bounds are crossed")
        if self.joint_kl_upper > self.separate_kl_upper + 1e-9:
            raise ValueError(
                f"joint bound {self.joint_kl_upper!r} exceeds the sum of the "
                f"separate bounds {self.separate_kl_upper!r}"
            )

    @property
    def separate_kl_upper(self) -> float:
        """Gap bound obtained by adding the two separate envelopes."""
        return 0.5 * self.upper_log_det_S + 0.5 * self.upper_log_det_C


def bounds_report(n: int, condition_ratio: float) -> BoundsReport:
    """Assemble every bound at one (n, condition ratio) point."""
    upper_s, profile_s = bound_log_det_S(n, condition_ratio)
    upper_c, profile_c = bound_log_det_C(n, condition_ratio)
    trace_bounds = bound_trace_S(n, condition_ratio)
    joint, profile_joint = bound_kl_joint(n, condition_ratio)
    return BoundsReport(
        n=n,
        condition_ratio=float(condition_ratio),
        upper_log_det_S=upper_s,
        upper_log_det_C=upper_c,
        lower_trace_S=trace_bounds.lower,
        upper_trace_S=trace_bounds.upper,
        joint_kl_upper=joint,
        maximizers={
            "log_det_S": profile_s,
            "log_det_C": profile_c,
            "trace_S_lower": trace_bounds.lower_profile,
            "trace_S_upper": trace_bounds.upper_profile,
            "kl_joint": profile_joint,
        },
    )


def envelope_sweep(n: int, ratio_grid) -> list[BoundsReport]:
    """Bounds at every point of an ascending condition-ratio grid."""
    grid = [float(r) for r in ratio_grid]
    if not grid:
        raise ValueError("condition-ratio grid must be non-empty")
    if any(r < 1.0 for r in grid):
        raise ValueError("condition-ratio grid values must be >= 1")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("condition-ratio grid must be ascending")
    return [bounds_report(n, r) for r in grid]
