"""Wide-sense Markov covariance engine on the embedded sample sequence.

Let W(kappa) be the flat embedded sequence of a discretely scale-invariant
process sampled on a :class:`~dsi_lab.core.SamplingScheme` (q offsets per
scale cycle).  When W is wide-sense Markov, its whole two-index covariance

    R_kappa(tau) = E[W(kappa + tau) W(kappa)]

is determined by 2q numbers: the per-offset variances R0[u] = R_u(0) and
the one-step products R1[u] = E[W(u+1) W(u)] for u = 0..q-1 (the last
entry wraps into the next cycle).  Writing f(j) = R1[j] / R0[j] and the
running product ftilde(r) = f(0) f(1) ... f(r) with ftilde(-1) = 1 and
periodic extension f(j + q) = f(j), the covariance factorizes as

    R_kappa(t*q + s) = ftilde(q-1)**t * ftilde(kappa+s-1) / ftilde(kappa-1)
                       * R_kappa(0),          0 <= s < q, t >= 0,

with the variance ladder R_kappa(0) = alpha**(2*n*T*H) * R0[u] for
kappa = n*q + u.  Negative lags follow from symmetry of the covariance,
R_kappa(-tau) = R_{kappa-tau}(tau).

The blocked view V(n) = (W(n*q), ..., W(n*q + q - 1)) is a q-dimensional
stationary-in-n sequence up to the deterministic scale factor: its lag
matrices satisfy Q(n, tau) = alpha**(2*n*T*H) * Q(0, tau).  For tau >= 1
the matrix has the rank-one product form ftilde(q-1)**tau * C * diag-free
outer structure C[u, v] * R0[v] with C[u, v] = ftilde(u-1) / ftilde(v-1);
at tau = 0 that product form is only valid on the lower triangle u >= v,
and the strict upper triangle is its mirror (covariance matrices are
symmetric: E[W(u) W(v)] carries the smaller index's variance either way).

Everything is wide-sense: only second moments enter, no distributional
assumptions beyond finite variances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import SamplingScheme, split_index
from .errors import InvalidModel, ModelUnstable, NegativeKappa

# relative slack for the Cauchy-Schwarz admissibility check
_CS_SLACK = 1e-12


@dataclass(frozen=True)
class MarkovCovarianceModel:
    """Flattened covariance summary of a wide-sense Markov embedded sequence.

    Parameters
    ----------
    scheme : SamplingScheme
        Sampling geometry (supplies q, alpha, T, H).
    R0 : array of shape (q,)
        Per-offset variances R_u(0), all strictly positive.
    R1 : array of shape (q,)
        One-step covariance products E[W(u+1) W(u)].  The last entry is the
        wrap product E[W(q) W(q-1)] into the next cycle.  Entries must be
        nonzero (the factorization divides by their running products) and
        satisfy Cauchy-Schwarz against the neighbouring variances.

    Construction validates admissibility and the strict stability bound
    |ftilde(q-1)| < alpha**(T*H); on the boundary the spectral series does
    not converge and ModelUnstable is raised.
    """

    scheme: SamplingScheme
    R0: np.ndarray
    R1: np.ndarray

    def __post_init__(self) -> None:
        q = self.scheme.q
        R0 = np.asarray(self.R0, dtype=float)
        R1 = np.asarray(self.R1, dtype=float)
        if R0.shape != (q,) or R1.shape != (q,):
            raise InvalidModel(
                f"R0 and R1 must have shape ({q},), got {R0.shape} and {R1.shape}"
            )
        if not np.all(np.isfinite(R0)) or not np.all(np.isfinite(R1)):
            raise InvalidModel("R0 and R1 must be finite")
        if np.any(R0 <= 0.0):
            raise InvalidModel(f"variances R0 must be strictly positive, got {R0}")
        if np.any(R1 == 0.0):
            raise InvalidModel(
                "one-step products R1 must be nonzero (their running product "
                "is inverted in the covariance factorization)"
            )
        # Cauchy-Schwarz: R1[j]**2 <= R0[j] * Var(W(j+1)); the wrap neighbour
        # variance is alpha**(2*T*H) * R0[0].
        scale_var = self.scheme.alpha ** (2 * self.scheme.T * self.scheme.H)
        next_var = np.concatenate([R0[1:], [scale_var * R0[0]]])
        bound = R0 * next_var
        if np.any(R1 ** 2 > bound * (1.0 + _CS_SLACK)):
            j = int(np.argmax(R1 ** 2 - bound))
            raise InvalidModel(
                f"R1[{j}]**2 = {float(R1[j] ** 2)!r} exceeds the Cauchy-Schwarz bound "
                f"{float(bound[j])!r}"
            )
        object.__setattr__(self, "R0", R0)
        object.__setattr__(self, "R1", R1)

        f = R1 / R0
        # prefix[v] = ftilde(v-1) = f(0) ... f(v-1); prefix[0] = 1
        prefix = np.concatenate([[1.0], np.cumprod(f)])
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_prefix", prefix)

        ratio = abs(prefix[q]) / self.scheme.alpha ** (self.scheme.T * self.scheme.H)
        if not ratio < 1.0:
            raise ModelUnstable(
                f"|ftilde(q-1)| = {float(abs(prefix[q]))!r} must be strictly below "
                f"alpha**(T*H) = {float(self.scheme.alpha ** (self.scheme.T * self.scheme.H))!r}"
            )
        object.__setattr__(self, "_stability_ratio", float(ratio))

    @property
    def f(self) -> np.ndarray:
        """Per-offset one-step ratios f(j) = R1[j] / R0[j]."""
        return self._f

    @property
    def ftilde_q(self) -> float:
        """Full-cycle product ftilde(q-1) = f(0) ... f(q-1)."""
        return float(self._prefix[self.scheme.q])

    @property
    def stability_ratio(self) -> float:
        """|ftilde(q-1)| / alpha**(T*H), strictly below 1 by construction.

        This is also the per-lag geometric decay ratio of the weighted
        spectral series terms."""
        return self._stability_ratio


def f_tilde(model: MarkovCovarianceModel, r: int) -> float:
    """Running product ftilde(r) = f(0) f(1) ... f(r) of the periodic ratios.

    Defined for every integer r via the closed form
    ftilde(m*q + v - 1) = ftilde(q-1)**m * ftilde(v-1): the empty product
    ftilde(-1) is 1, and negative r continue the periodic extension
    (all ratios are nonzero, so the inverse powers exist).
    """
    q = model.scheme.q
    m, v = divmod(int(r) + 1, q)
    return float(model._prefix[q] ** m * model._prefix[v])


def _f_tilde_ratio(model: MarkovCovarianceModel, a: int, b: int) -> float:
    # ftilde(a) / ftilde(b) without forming either product separately,
    # so large kappa cannot overflow the intermediate.
    q = model.scheme.q
    ma, va = divmod(int(a) + 1, q)
    mb, vb = divmod(int(b) + 1, q)
    return float(
        model._prefix[q] ** (ma - mb) * (model._prefix[va] / model._prefix[vb])
    )


def covariance_W(model: MarkovCovarianceModel, kappa: int, tau: int) -> float:
    """Covariance R_kappa(tau) = E[W(kappa + tau) W(kappa)] of the flat sequence.

    Both sample indices must be >= 0 (kappa and kappa + tau), otherwise
    NegativeKappa is raised.  Negative lags are evaluated through the
    symmetry R_kappa(-tau) = R_{kappa - tau}(tau).
    """
    kappa = int(kappa)
    tau = int(tau)
    if kappa < 0:
        raise NegativeKappa(f"kappa must be >= 0, got {kappa}")
    if kappa + tau < 0:
        raise NegativeKappa(
            f"kappa + tau must be >= 0, got {kappa} + {tau} = {kappa + tau}"
        )
    if tau < 0:
        kappa, tau = kappa + tau, -tau
    scheme = model.scheme
    t, s = divmod(tau, scheme.q)
    n, u = split_index(kappa, scheme.q)
    var = scheme.alpha ** (2 * n * scheme.T * scheme.H) * model.R0[u]
    return float(
        model.ftilde_q ** t * _f_tilde_ratio(model, kappa + s - 1, kappa - 1) * var
    )


@dataclass(frozen=True)
class CovarianceMatrixResult:
    """Lag-tau covariance matrix of the blocked q-dimensional view.

    matrix[u, v] = E[V^u(n + tau) V^v(n)] evaluated at block n, where
    V^u(n) = W(n*q + u).  Satisfies the exact scale ladder
    matrix(n, tau) = alpha**(2*n*T*H) * matrix(0, tau).
    """

    n: int
    tau: int
    matrix: np.ndarray


def covariance_V(
    model: MarkovCovarianceModel, n: int, tau: int
) -> CovarianceMatrixResult:
    """Lag matrix Q(n, tau) of the blocked view, for integer n and tau >= 0.

    Built from the rank-one product form ftilde(q-1)**tau * C[u, v] * R0[v]
    with C[u, v] = ftilde(u-1) / ftilde(v-1), which holds entrywise for
    tau >= 1 and on the lower triangle u >= v at tau = 0; the strict upper
    triangle at tau = 0 is the symmetric mirror.  The result therefore always
    equals the entrywise assembly from :func:`covariance_W`.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    scheme = model.scheme
    q = scheme.q
    pref = model._prefix[:q]
    base = model.ftilde_q ** tau * np.outer(pref, model.R0 / pref)
    if tau == 0:
        iu, jv = np.triu_indices(q, k=1)
        base[iu, jv] = base[jv, iu]
    scale = scheme.alpha ** (2 * n * scheme.T * scheme.H)
    return CovarianceMatrixResult(n=int(n), tau=int(tau), matrix=scale * base)


def model_from_sbm(scheme: SamplingScheme) -> MarkovCovarianceModel:
    """Covariance summary of the banded Brownian reference construction.

    The reference process rescales a Brownian motion by the constant
    lambda**(n*H') on the n-th scale cycle (lambda = alpha**T,
    H' = H - 1/2), giving the exact covariance
    E[X(t1) X(t2)] = lambda**((n1 + n2) * H') * min(t1, t2) for t_i in
    cycle n_i.  On the sampling grid this yields

        R0[u] = lambda**(2*H') * s_u
        R1[u] = lambda**(2*H') * s_u          (u < q-1)
        R1[q-1] = lambda**(3*H') * s_{q-1}    (wrap into the next cycle)

    and the model is always strictly stable: |ftilde(q-1)| = lambda**H'
    < lambda**H.
    """
    lam = scheme.scale
    hp = scheme.H - 0.5
    s = np.asarray(scheme.s, dtype=float)
    R0 = lam ** (2 * hp) * s
    R1 = R0.copy()
    R1[-1] = lam ** (3 * hp) * s[-1]
    return MarkovCovarianceModel(scheme=scheme, R0=R0, R1=R1)


def doob_factorization(
    model: MarkovCovarianceModel, kappa_range: Iterable[int] | Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Factor the covariance as R_kappa(tau) = G(kappa) * Hfac(kappa + tau).

    Returns the pair of arrays (G, Hfac) over the given kappa values
    (each must be >= 0), normalized by Hfac = ftilde(kappa - 1) so that
    Hfac(0) = 1 and G(kappa) = R_kappa(0) / Hfac(kappa).  For a wide-sense
    Markov sequence with nonnegative ratios the quotient G / Hfac is
    nondecreasing in kappa.
    """
    kappas = [int(k) for k in kappa_range]
    for k in kappas:
        if k < 0:
            raise NegativeKappa(f"kappa must be >= 0, got {k}")
    hfac = np.array([f_tilde(model, k - 1) for k in kappas])
    var = np.array([covariance_W(model, k, 0) for k in kappas])
    return var / hfac, hfac
