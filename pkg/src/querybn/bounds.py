"""Closed-form sample-complexity calculators.

Each function returns the number of labeled queries, unlabeled queries, or
event tuples sufficient for an epsilon-accurate score estimate (or an
epsilon-optimal fit) with probability at least 1 - delta.  All logarithms
are natural and results round up to whole samples.
"""

from __future__ import annotations

from math import ceil, log


def _check_eps_delta(eps: float, delta: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def m_lsq(eps: float, delta: float) -> int:
    """Labeled queries sufficient to estimate a fixed net's score:
    ceil((1 / (2 eps^2)) ln(2 / delta))."""
    _check_eps_delta(eps, delta)
    return ceil(log(2.0 / delta) / (2.0 * eps * eps))


def m_sq(eps: float, delta: float) -> int:
    """Unlabeled queries needed when labels must be estimated from events:
    ceil((2 / eps^2) ln(4 / delta))."""
    _check_eps_delta(eps, delta)
    return ceil(2.0 / (eps * eps) * log(4.0 / delta))


def m_prime_d(eps: float, delta: float, m_sq_value: int) -> int:
    """Matching event tuples required per distinct evidence pattern:
    ceil((8 / eps^2) ln(2 M_SQ / delta))."""
    _check_eps_delta(eps, delta)
    if m_sq_value < 1:
        raise ValueError(f"m_sq_value must be at least 1, got {m_sq_value}")
    return ceil(8.0 / (eps * eps) * log(2.0 * m_sq_value / delta))


def m_d(eps: float, delta: float, lam: float) -> int:
    """A-priori total event tuples when every conditioning event has
    probability at least ``lam``:

        max( (2/lam) [M'_D + ln(4 M_SQ / delta)],  (8/eps^2) ln(4 M_SQ / delta) )

    M_SQ and M'_D are computed internally (as integer sample counts).
    """
    _check_eps_delta(eps, delta)
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lam must lie in (0, 1], got {lam}")
    msq = m_sq(eps, delta)
    mpd = m_prime_d(eps, delta, msq)
    tail = log(4.0 * msq / delta)
    first = (2.0 / lam) * (mpd + tail)
    second = 8.0 / (eps * eps) * tail
    return ceil(max(first, second))


def m_prime_lsq(eps: float, delta: float, k: int, n: int, c: float) -> int:
    """Labeled queries sufficient for the empirically-best interior net to
    be epsilon-close to optimal:

        ceil( (1 / (4 eps^2)) [ ln(2/delta) + K ln(2K/eps)
                                + N K ln(2 + c - ln eps) ] )

    for K CPT entries over N variables, with interiority exponent c > 1.
    """
    _check_eps_delta(eps, delta)
    if k < 1 or n < 1:
        raise ValueError(f"K and N must be at least 1, got K={k}, N={n}")
    if c <= 1.0:
        raise ValueError(f"c must exceed 1, got {c}")
    total = log(2.0 / delta) + k * log(2.0 * k / eps) + n * k * log(2.0 + c - log(eps))
    return ceil(total / (4.0 * eps * eps))
