"""Sampling geometry for discretely scale-invariant processes.

A process observed on a geometric ladder of scale cycles is sampled at
``q`` offsets ``1 <= s_0 < s_1 < ... < s_{q-1} < alpha**T`` inside the base
cycle ``[1, alpha**T)``.  Cycle ``n`` (any integer) contains the points
``alpha**(n*T) * s_u``, and the flat sample index

    kappa = n*q + u,   0 <= u < q

enumerates all points in time order.  This module owns the index algebra
(splitting kappa into the cycle/offset pair and back) and the physical
time of each sample, plus validation of the scheme parameters.

Floor division defines the split for negative kappa as well, so e.g.
kappa = -1 with q = 3 lives in cycle n = -1 at offset u = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    BadBase,
    BadIndex,
    NonIncreasingOffsets,
    OffsetOutOfRange,
    RangeOverflow,
)

# double precision overflows just above exp(709); stay inside the normal range
_MAX_LOG = 709.0


@dataclass(frozen=True)
class SamplingScheme:
    """Validated sampling geometry.

    Attributes
    ----------
    H : float
        Self-similarity index, H > 0.
    alpha : float
        Scale base, alpha > 1.
    T : int
        Cycle width in log-scale units, T >= 1.  One cycle spans a factor
        ``l = alpha**T`` in physical time.
    q : int
        Number of sampling offsets per cycle, q >= 1.
    s : tuple of float
        Offsets, strictly increasing with 1 <= s[0] and s[-1] < alpha**T.
    """

    H: float
    alpha: float
    T: int
    q: int
    s: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (isinstance(self.T, int) and self.T >= 1):
            raise BadIndex(f"T must be an integer >= 1, got {self.T!r}")
        if not (isinstance(self.q, int) and self.q >= 1):
            raise BadIndex(f"q must be an integer >= 1, got {self.q!r}")
        if not (self.H > 0.0 and math.isfinite(self.H)):
            raise BadIndex(f"H must be finite and > 0, got {self.H!r}")
        if not (self.alpha > 1.0 and math.isfinite(self.alpha)):
            raise BadBase(f"alpha must be finite and > 1, got {self.alpha!r}")
        if len(self.s) != self.q:
            raise BadIndex(
                f"offset count {len(self.s)} does not match q = {self.q}"
            )
        for a, b in zip(self.s, self.s[1:]):
            if not (b > a):
                raise NonIncreasingOffsets(
                    f"offsets must be strictly increasing, got {self.s}"
                )
        if not (self.s[0] >= 1.0):
            raise OffsetOutOfRange(f"s[0] must be >= 1, got {self.s[0]!r}")
        if not (self.s[-1] < self.scale):
            raise OffsetOutOfRange(
                f"s[-1] must be < alpha**T = {self.scale!r}, got {self.s[-1]!r}"
            )

    @property
    def scale(self) -> float:
        """Cycle scale factor l = alpha**T."""
        return self.alpha ** self.T


def validate_scheme(
    H: float,
    alpha: float,
    T: int,
    s: Sequence[float],
    q: int | None = None,
) -> SamplingScheme:
    """Build a :class:`SamplingScheme` from raw values.

    ``q`` defaults to ``len(s)``; if given explicitly it must match.
    Raises BadIndex, BadBase, NonIncreasingOffsets or OffsetOutOfRange on
    the first violated requirement.
    """
    offsets = tuple(float(x) for x in s)
    if q is None:
        q = len(offsets)
    return SamplingScheme(H=float(H), alpha=float(alpha), T=int(T), q=int(q), s=offsets)


def split_index(kappa: int, q: int) -> tuple[int, int]:
    """Split a flat index into the (cycle, offset) pair, kappa = n*q + u.

    Uses floor division, so negative kappa maps to the unique pair with
    0 <= u < q (e.g. split_index(-1, 3) == (-1, 2)).
    """
    if q < 1:
        raise BadIndex(f"q must be >= 1, got {q}")
    n, u = divmod(int(kappa), int(q))
    return n, u


def embed_index(n: int, u: int, q: int) -> int:
    """Inverse of :func:`split_index`: kappa = n*q + u with 0 <= u < q."""
    if q < 1:
        raise BadIndex(f"q must be >= 1, got {q}")
    if not (0 <= u < q):
        raise OffsetOutOfRange(f"offset index u must satisfy 0 <= u < {q}, got {u}")
    return int(n) * int(q) + int(u)


@dataclass(frozen=True)
class EmbeddedIndex:
    """Flat index kappa together with its split (n, u), kappa = n*q + u."""

    kappa: int
    n: int
    u: int


@dataclass(frozen=True)
class SamplePoint:
    """One sampling location: its index triple and physical time."""

    index: EmbeddedIndex
    time: float


def sample_time(scheme: SamplingScheme, kappa: int) -> float:
    """Physical time of sample kappa, t = alpha**(n*T) * s_u.

    Raises RangeOverflow when the magnitude leaves the normal double range
    (|log t| > ~709), which would silently overflow or flush to zero.
    """
    n, u = split_index(kappa, scheme.q)
    log_t = n * scheme.T * math.log(scheme.alpha) + math.log(scheme.s[u])
    if abs(log_t) > _MAX_LOG:
        raise RangeOverflow(
            f"sample time for kappa = {kappa} has log magnitude {log_t:.1f}, "
            f"outside double precision"
        )
    return scheme.alpha ** (n * scheme.T) * scheme.s[u]


def sample_points(
    scheme: SamplingScheme, kappa_min: int, kappa_max: int
) -> list[SamplePoint]:
    """All sample points for kappa in [kappa_min, kappa_max], time-ordered.

    Times strictly increase with kappa, and one full cycle advances time by
    exactly the cycle factor: t(kappa + q) = alpha**T * t(kappa).
    """
    if kappa_max < kappa_min:
        raise BadIndex(
            f"empty index range [{kappa_min}, {kappa_max}]"
        )
    points = []
    for kappa in range(kappa_min, kappa_max + 1):
        n, u = split_index(kappa, scheme.q)
        t = sample_time(scheme, kappa)
        points.append(SamplePoint(index=EmbeddedIndex(kappa=kappa, n=n, u=u), time=t))
    return points
