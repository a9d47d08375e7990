"""Scalar diagnostics: photon statistics and spontaneous-emission fractions.

The Fano factor is undefined (None, not NaN) when the mean photon number is
numerically zero, because pump sweeps legitimately reach the switched-off
region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ConfigurationError, PreconditionError
from .liouvillian import SteadyState
from .models import RateParams

_FANO_MEAN_FLOOR = 1e-12


@dataclass(frozen=True)
class PhotonStats:
    mean_n: float
    fano: float | None  # None when mean_n is numerically zero
    populations: np.ndarray  # p(level, n), shape (n_levels, n_max+1)

    @property
    def fano_defined(self) -> bool:
        return self.fano is not None


def photon_stats(ss: SteadyState) -> PhotonStats:
    """Mean photon number, Fano factor and per-(level, n) populations."""
    space = ss.model.space
    diag = np.real(np.diag(ss.rho))
    pops = diag.reshape(space.n_levels, space.n_max + 1)
    p_n = pops.sum(axis=0)
    ns = np.arange(space.n_max + 1)
    mean_n = float(np.dot(ns, p_n))
    mean_n2 = float(np.dot(ns**2, p_n))
    if mean_n < _FANO_MEAN_FLOOR:
        fano = None
    else:
        fano = (mean_n2 - mean_n**2) / mean_n
    return PhotonStats(mean_n=mean_n, fano=fano, populations=pops)


def beta_three_level(params: RateParams) -> float:
    """Fraction of spontaneous emission captured by the cavity, two-level gain.

    beta = R / (R + gamma/2) with R = 2 g^2 / (gamma + Gamma + 2 kappa);
    pump-dependent, so beta -> 0 as Gamma grows.
    """
    if params.gamma <= 0:
        raise ConfigurationError("beta requires gamma > 0")
    cavity_rate = 2.0 * params.g**2 / (params.gamma + params.Gamma + 2.0 * params.kappa)
    return cavity_rate / (cavity_rate + params.gamma / 2.0)


def beta_four_level(params: RateParams) -> float:
    """Cavity fraction for the four-level ladder; set by gamma_f, not the pump."""
    if params.gamma <= 0:
        raise ConfigurationError("beta requires gamma > 0")
    cavity_rate = 2.0 * params.g**2 / (params.gamma_f + 2.0 * params.kappa)
    return cavity_rate / (cavity_rate + params.gamma / 2.0)


def beta_for_scheme(scheme: str, params: RateParams) -> float:
    if scheme == "three-incoherent":
        return beta_three_level(params)
    if scheme in ("four-incoherent", "four-coherent"):
        return beta_four_level(params)
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def verify_adiabatic_reduction(
    params: RateParams,
    n: int = 0,
    t_final: float | None = None,
    n_samples: int = 2001,
) -> float:
    """Compare the coupled amplitude pair against its adiabatically reduced form.

    The no-jump amplitudes of the four-level ladder obey, for photon sector n,

        d/dt c_upper = -(gamma/2 + n kappa) c_upper - g sqrt(n+1) c_lower
        d/dt c_lower = -(gamma_f/2 + (n+1) kappa) c_lower + g sqrt(n+1) c_upper

    and when gamma_f dominates every other rate the lower amplitude follows
    the upper one, leaving a single decay channel of strength
    g^2 (n+1) / (kappa (n+1) + gamma_f / 2) on top of gamma/2 + n kappa.

    Returns the maximum deviation of the upper amplitude between the two
    integrations from a matched start (c_upper=1, c_lower=0).  Validation
    harness only; nothing in the production pipeline calls this.
    """
    gamma, gamma_f, g, kappa, big_gamma = (
        params.gamma, params.gamma_f, params.g, params.kappa, params.Gamma)
    if gamma_f < 50.0 * max(gamma, g, kappa, big_gamma):
        raise PreconditionError(
            "adiabatic check requires gamma_f >= 50 * max(gamma, g, kappa, Gamma)")
    if n < 0:
        raise ConfigurationError("photon sector must be >= 0")

    gn = g * np.sqrt(n + 1.0)
    # coupled pair: state ordering (c_upper, c_lower)
    m = np.array([
        [-(gamma / 2.0 + n * kappa), -gn],
        [gn, -(gamma_f / 2.0 + (n + 1) * kappa)],
    ])
    reduced_rate = gamma / 2.0 + n * kappa + (
        g**2 * (n + 1.0) / (kappa * (n + 1.0) + gamma_f / 2.0))

    if t_final is None:
        slow = max(gamma, 2.0 * kappa, 2.0 * reduced_rate, 1e-12)
        t_final = 10.0 / slow
    times = np.linspace(0.0, t_final, n_samples)

    evals, evecs = np.linalg.eig(m)
    coeffs = np.linalg.solve(evecs, np.array([1.0, 0.0]))
    full_upper = np.real(evecs[0, :] @ (coeffs[:, None] * np.exp(np.outer(evals, times))))
    reduced_upper = np.exp(-reduced_rate * times)
    return float(np.max(np.abs(full_upper - reduced_upper)))


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """Half the trace norm of the difference of two density matrices."""
    diff = rho_a - rho_b
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(la.eigvalsh(diff))))
