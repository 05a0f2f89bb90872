"""Circular overlapping training subsets over a time-ordered series.

A plan slides a window of w samples with stride d over N samples under
periodic boundary conditions, producing M = N/d equally sized subsets in
which every sample appears exactly M_train = w/d times. Divisibility
(d | N and d | w) is required rather than padded around: it is the only
configuration in which the equal-representation property holds exactly,
and callers can trim the series to the nearest multiple of d.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    ConfigError,
    DegeneratePlanError,
    NonDivisibleError,
    WindowTooLargeError,
)


@dataclass(frozen=True)
class SubsetPlan:
    """The M circular window index sets plus their defining parameters."""

    n: int
    w: int
    d: int
    m: int
    m_train: int
    windows: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {"n": self.n, "w": self.w, "d": self.d, "m": self.m, "m_train": self.m_train}


def build_plan(n: int, w: int, d: int) -> SubsetPlan:
    """Build the subset plan for n samples, window w, stride d.

    Window j covers indices (j*d + t) mod n for t in 0..w-1, so window j+1
    is window j shifted by d. Raises WindowTooLargeError, NonDivisibleError
    or DegeneratePlanError when the parameters cannot yield a plan in which
    every sample is in exactly w/d of the n/d subsets and absent from at
    least one.
    """
    if d < 1 or w < 1:
        raise ConfigError(f"window and stride must be positive, got w={w}, d={d}")
    if d > w:
        raise ConfigError(f"stride d={d} must not exceed window w={w}")
    if w > n:
        raise WindowTooLargeError(f"window w={w} exceeds series length n={n}")
    if n % d != 0 or w % d != 0:
        raise NonDivisibleError(
            f"stride d={d} must divide both n={n} and w={w}; trim the series first"
        )
    m = n // d
    m_train = w // d
    if m_train >= m:
        raise DegeneratePlanError(
            f"plan has M_train={m_train} >= M={m}; every sample would be in every subset"
        )
    windows = tuple(
        tuple((j * d + t) % n for t in range(w)) for j in range(m)
    )
    return SubsetPlan(n=n, w=w, d=d, m=m, m_train=m_train, windows=windows)


def membership(plan: SubsetPlan, i: int) -> tuple[list[int], list[int]]:
    """Split subset ids into (containing sample i, not containing it).

    The two lists partition 0..M-1; the first has length M_train.
    """
    if not 0 <= i < plan.n:
        raise IndexError(f"sample index {i} out of range for n={plan.n}")
    in_subsets = [j for j in range(plan.m) if (i - j * plan.d) % plan.n < plan.w]
    out_subsets = [j for j in range(plan.m) if (i - j * plan.d) % plan.n >= plan.w]
    return in_subsets, out_subsets


def plan_from_fractions(n: int, window_fraction: float, m_train: int) -> tuple[SubsetPlan, int]:
    """Derive (plan, trimmed_n) from a window fraction and repeat count.

    Computes d = floor(n * window_fraction / m_train), w = m_train * d, and
    trims the series to the largest multiple of d so the divisibility
    preconditions hold. Returns the plan over the trimmed length plus that
    length; callers drop trailing rows.
    """
    if not 0 < window_fraction < 1:
        raise ConfigError(f"window_fraction must be in (0, 1), got {window_fraction}")
    if m_train < 1:
        raise ConfigError(f"m_train must be >= 1, got {m_train}")
    d = int(n * window_fraction / m_train)
    if d < 1:
        raise ConfigError(
            f"window_fraction={window_fraction} with m_train={m_train} yields an empty stride"
        )
    w = m_train * d
    trimmed = (n // d) * d
    return build_plan(trimmed, w, d), trimmed
