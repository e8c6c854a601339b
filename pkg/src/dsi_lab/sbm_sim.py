"""Banded Brownian reference process: exact covariance and Monte Carlo.

The reference construction pieces together a single Brownian motion B with
deterministic band coefficients: on scale cycle n (physical times in
[lambda**n, lambda**(n+1)), lambda = alpha**T) the process is

    X(t) = lambda**(b * H') * B(t),   b = n + 1,  H' = H - 1/2,

so its covariance is exactly

    E[X(t1) X(t2)] = lambda**((b1 + b2) * H') * min(t1, t2).

Restricted to a sampling scheme's grid this is a wide-sense Markov embedded
sequence whose flattened summary :func:`~dsi_lab.markov_cov.model_from_sbm`
produces, which makes it the natural ground truth for everything else in
this package: the exact covariance here validates the factorized engine,
and simulated ensembles validate both through plain moment estimators.

Simulation is reproducible by construction.  Path i of a run with seed s
draws from a counter-based Philox stream keyed by the pair (s, i), so the
ensemble is bit-identical for any worker count and any evaluation order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import SamplingScheme, sample_points
from .errors import BadIndex, NegativeKappa, RangeTooSmall

_SEED_BOUND = 2 ** 64


def _band(kappa: int, q: int) -> int:
    # cycle index + 1; matches the covariance exponent convention above
    return kappa // q + 1


def resolve_workers(workers: int | None = None) -> int:
    """Worker count for path synthesis.

    ``None`` defers to the DSI_LAB_THREADS environment variable when set
    (0 means auto = CPU count), defaulting to 1.  Results never depend on
    the worker count; this only caps parallelism.
    """
    if workers is None:
        env = os.environ.get("DSI_LAB_THREADS")
        if env is None:
            return 1
        try:
            workers = int(env)
        except ValueError:
            raise BadIndex(f"DSI_LAB_THREADS must be an integer, got {env!r}")
    workers = int(workers)
    if workers < 0:
        raise BadIndex(f"worker count must be >= 0, got {workers}")
    if workers == 0:
        return os.cpu_count() or 1
    return workers


@dataclass(frozen=True)
class EstimateWithError:
    """Monte Carlo estimate with its standard error."""

    value: float
    std_error: float
    n_samples: int


@dataclass(frozen=True)
class MatrixEstimate:
    """Entrywise Monte Carlo estimate of one lag matrix."""

    tau: int
    value: np.ndarray
    std_error: np.ndarray
    n_samples: int

    def entry(self, u: int, v: int) -> EstimateWithError:
        return EstimateWithError(
            value=float(self.value[u, v]),
            std_error=float(self.std_error[u, v]),
            n_samples=self.n_samples,
        )


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated sample paths of the reference process on the flat grid.

    paths[i, k] is path i observed at flat index kappa_min + k; times
    carries the matching physical sample times.
    """

    scheme: SamplingScheme
    kappa_min: int
    kappa_max: int
    times: np.ndarray
    paths: np.ndarray
    seed: int


def sbm_covariance_exact(scheme: SamplingScheme, kappa1: int, kappa2: int) -> float:
    """Exact covariance E[X(t_kappa1) X(t_kappa2)] of the reference process.

    Closed form lambda**((b1 + b2) * H') * min(t1, t2) with band indices
    b_i = floor(kappa_i / q) + 1.  Both indices must be >= 0.
    """
    if kappa1 < 0 or kappa2 < 0:
        raise NegativeKappa(f"indices must be >= 0, got ({kappa1}, {kappa2})")
    lam = scheme.scale
    hp = scheme.H - 0.5
    pts = {
        k: sample_points(scheme, k, k)[0].time for k in {int(kappa1), int(kappa2)}
    }
    b1 = _band(int(kappa1), scheme.q)
    b2 = _band(int(kappa2), scheme.q)
    return lam ** ((b1 + b2) * hp) * min(pts[int(kappa1)], pts[int(kappa2)])


def _path_stream(seed: int, path_index: int) -> np.random.Generator:
    # counter-based stream keyed by the (seed, path) pair; independent
    # streams by construction, no sequential state shared across paths
    key = int(seed) | (int(path_index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_paths(
    scheme: SamplingScheme,
    kappa_range: tuple[int, int],
    P: int,
    seed: int,
    workers: int | None = None,
) -> PathEnsemble:
    """Draw P independent paths of the reference process on the flat grid.

    Parameters
    ----------
    scheme : SamplingScheme
        Sampling geometry.
    kappa_range : (int, int)
        Inclusive flat index range; the lower end must be >= 0.
    P : int
        Number of paths, P >= 1.
    seed : int
        64-bit ensemble seed.  Path i uses the Philox stream keyed by
        (seed, i); the underlying Brownian motion is built from its first
        K standard normals via the increment representation
        B(t_k) = B(t_{k-1}) + sqrt(t_k - t_{k-1}) * z_k, B(t_0) = sqrt(t_0) * z_0.
    workers : int or None
        Parallel path-synthesis workers; see :func:`resolve_workers`.
        The output is identical for every worker count.
    """
    kappa_min, kappa_max = int(kappa_range[0]), int(kappa_range[1])
    if kappa_min < 0:
        raise NegativeKappa(f"kappa range must start at >= 0, got {kappa_min}")
    if kappa_max < kappa_min:
        raise BadIndex(f"empty index range [{kappa_min}, {kappa_max}]")
    if P < 1:
        raise RangeTooSmall(f"need at least one path, got P = {P}")
    if not (0 <= int(seed) < _SEED_BOUND):
        raise BadIndex(f"seed must be a 64-bit unsigned integer, got {seed!r}")

    pts = sample_points(scheme, kappa_min, kappa_max)
    times = np.array([p.time for p in pts])
    K = times.size
    lam = scheme.scale
    hp = scheme.H - 0.5
    bands = np.array([_band(p.index.kappa, scheme.q) for p in pts])
    factors = lam ** (bands * hp)
    # Brownian increment scales, first one from the origin
    inc_std = np.sqrt(np.diff(times, prepend=0.0))

    out = np.empty((P, K), dtype=float)

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            z = _path_stream(seed, i).standard_normal(K)
            out[i] = factors * np.cumsum(inc_std * z)

    n_workers = resolve_workers(workers)
    if n_workers <= 1 or P == 1:
        fill(0, P)
    else:
        n_workers = min(n_workers, P)
        step = math.ceil(P / n_workers)
        spans = [(lo, min(lo + step, P)) for lo in range(0, P, step)]
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for fut in [pool.submit(fill, lo, hi) for lo, hi in spans]:
                fut.result()

    return PathEnsemble(
        scheme=scheme,
        kappa_min=kappa_min,
        kappa_max=kappa_max,
        times=times,
        paths=out,
        seed=int(seed),
    )


def _column(ensemble: PathEnsemble, kappa: int) -> np.ndarray:
    if not (ensemble.kappa_min <= kappa <= ensemble.kappa_max):
        raise RangeTooSmall(
            f"ensemble covers kappa in [{ensemble.kappa_min}, {ensemble.kappa_max}], "
            f"estimator needs kappa = {kappa}"
        )
    return ensemble.paths[:, kappa - ensemble.kappa_min]


def _mean_with_error(products: np.ndarray) -> EstimateWithError:
    P = products.shape[0]
    return EstimateWithError(
        value=float(products.mean()),
        std_error=float(products.std(ddof=1) / math.sqrt(P)),
        n_samples=P,
    )


def estimate_R(
    ensemble: PathEnsemble,
) -> tuple[list[EstimateWithError], list[EstimateWithError]]:
    """Moment estimates of the flattened summary (R0, R1) from an ensemble.

    Returns per-offset lists (R0_hat, R1_hat) where R0_hat[j] estimates
    E[W(j)**2] and R1_hat[j] estimates E[W(j+1) W(j)].  Requires flat
    indices 0..q in the ensemble and at least two paths (the standard
    error uses the ddof=1 sample deviation of the per-path products).
    """
    if ensemble.paths.shape[0] < 2:
        raise RangeTooSmall("standard errors need at least two paths")
    q = ensemble.scheme.q
    r0 = [_mean_with_error(_column(ensemble, j) ** 2) for j in range(q)]
    r1 = [
        _mean_with_error(_column(ensemble, j + 1) * _column(ensemble, j))
        for j in range(q)
    ]
    return r0, r1


def estimate_Q(ensemble: PathEnsemble, tau_max: int) -> list[MatrixEstimate]:
    """Moment estimates of the blocked lag matrices Q(0, tau), tau = 0..tau_max.

    Entry (u, v) of lag tau averages W(tau*q + u) * W(v) over paths.
    Requires flat indices 0..(tau_max + 1)*q - 1 in the ensemble.
    """
    if tau_max < 0:
        raise BadIndex(f"tau_max must be >= 0, got {tau_max}")
    if ensemble.paths.shape[0] < 2:
        raise RangeTooSmall("standard errors need at least two paths")
    q = ensemble.scheme.q
    out = []
    for tau in range(tau_max + 1):
        value = np.empty((q, q))
        err = np.empty((q, q))
        for u in range(q):
            for v in range(q):
                prod = _column(ensemble, tau * q + u) * _column(ensemble, v)
                est = _mean_with_error(prod)
                value[u, v] = est.value
                err[u, v] = est.std_error
        out.append(
            MatrixEstimate(
                tau=tau, value=value, std_error=err, n_samples=ensemble.paths.shape[0]
            )
        )
    return out
