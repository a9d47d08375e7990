"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written against the defining formulas with
plain matrix products, element-by-element rate equations, or time-domain
quadrature, never by calling the code paths under test.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la


# ---------------------------------------------------------------------------
# brute-force Lindblad action and generator assembly

def lindblad_rhs(h: np.ndarray, collapses, rho: np.ndarray) -> np.ndarray:
    """-i[H, rho] + sum rate (c rho c+ - {c+c, rho}/2), by direct products."""
    out = -1j * (h @ rho - rho @ h)
    for c, rate in collapses:
        cd = c.conj().T
        cdc = cd @ c
        out = out + rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return out


def brute_force_generator(h: np.ndarray, collapses) -> np.ndarray:
    """Column-stacked superoperator built one basis matrix at a time."""
    dim = h.shape[0]
    m = np.zeros((dim * dim, dim * dim), dtype=complex)
    for j in range(dim):
        for i in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            col = lindblad_rhs(h, collapses, e).reshape(-1, order="F")
            m[:, i + j * dim] = col
    return m


# ---------------------------------------------------------------------------
# hand-derived element rate equations (three-level scheme)
#
# Each population rho_{n,j;n,j} and emission-aligned coherence
# x_n = rho_{n,1;n-1,2} obeys a closed linear system.  These were derived by
# hand from the dissipator definitions; known misprints in the published
# transcription (swapped coherent feed terms between the two population
# equations, a sqrt(n(n-1)) that should be sqrt(n(n+1)), and a transposed
# coherence index) are corrected here, see the cavity-feed and drive terms.
# Out-of-range elements are zero, which matches the truncated operators.

def three_level_element_rates(params, space, rho: np.ndarray) -> dict:
    """RHS for every sector element, keyed by ('pop', level, n) / ('coh', n)."""
    g, kappa, gamma, Gamma = params.g, params.kappa, params.gamma, params.Gamma
    n_max = space.n_max

    def pop(level, n):
        if n < 0 or n > n_max:
            return 0.0
        i = space.flat_index(level, n)
        return rho[i, i]

    def coh(n):  # rho_{n,1;n-1,2}
        if n < 1 or n > n_max:
            return 0.0
        return rho[space.flat_index(1, n), space.flat_index(2, n - 1)]

    out = {}
    for n in range(n_max + 1):
        x_n = coh(n)
        x_n1 = coh(n + 1)
        out[("pop", 1, n)] = (
            2 * kappa * (n + 1) * pop(1, n + 1)
            - (2 * kappa * n + Gamma) * pop(1, n)
            + gamma * pop(2, n)
            + g * np.sqrt(n) * (x_n + np.conj(x_n))
        )
        out[("pop", 2, n)] = (
            2 * kappa * (n + 1) * pop(2, n + 1)
            - (2 * kappa * n + gamma) * pop(2, n)
            + Gamma * pop(1, n)
            - g * np.sqrt(n + 1) * (x_n1 + np.conj(x_n1))
        )
    for n in range(1, n_max + 1):
        out[("coh", n)] = (
            2 * kappa * np.sqrt(n * (n + 1)) * coh(n + 1)
            - (kappa * (2 * n - 1) + (Gamma + gamma) / 2) * coh(n)
            + g * np.sqrt(n) * (pop(2, n - 1) - pop(1, n))
        )
    return out


def four_level_element_rates(params, space, rho: np.ndarray) -> dict:
    """Same idea for the incoherent four-level ladder; y_n = rho_{n,2;n-1,3}.

    The coherence damping carries gamma/2 + gamma_f/2 (both lasing levels
    decay), which the published element form drops but its own restricted
    correlation equations include.
    """
    g, kappa, gamma, Gamma, gamma_f = (
        params.g, params.kappa, params.gamma, params.Gamma, params.gamma_f)
    n_max = space.n_max

    def pop(level, n):
        if n < 0 or n > n_max:
            return 0.0
        i = space.flat_index(level, n)
        return rho[i, i]

    def coh(n):  # rho_{n,2;n-1,3}
        if n < 1 or n > n_max:
            return 0.0
        return rho[space.flat_index(2, n), space.flat_index(3, n - 1)]

    out = {}
    for n in range(n_max + 1):
        y_n = coh(n)
        y_n1 = coh(n + 1)
        out[("pop", 1, n)] = (
            2 * kappa * (n + 1) * pop(1, n + 1)
            - (2 * kappa * n + Gamma) * pop(1, n)
            + gamma_f * pop(2, n)
        )
        out[("pop", 2, n)] = (
            2 * kappa * (n + 1) * pop(2, n + 1)
            - (2 * kappa * n + gamma_f) * pop(2, n)
            + gamma * pop(3, n)
            + g * np.sqrt(n) * (y_n + np.conj(y_n))
        )
        out[("pop", 3, n)] = (
            2 * kappa * (n + 1) * pop(3, n + 1)
            - (2 * kappa * n + gamma) * pop(3, n)
            + Gamma * pop(1, n)
            - g * np.sqrt(n + 1) * (y_n1 + np.conj(y_n1))
        )
    for n in range(1, n_max + 1):
        out[("coh", n)] = (
            2 * kappa * np.sqrt(n * (n + 1)) * coh(n + 1)
            - (kappa * (2 * n - 1) + gamma / 2 + gamma_f / 2) * coh(n)
            + g * np.sqrt(n) * (pop(3, n - 1) - pop(2, n))
        )
    return out


def random_sector_state(space, rng, coherence_pairs) -> np.ndarray:
    """Random Hermitian matrix supported on populations + given coherences.

    coherence_pairs is a list of (flat_row, flat_col); the conjugate element
    is filled automatically.
    """
    dim = space.dim
    rho = np.zeros((dim, dim), dtype=complex)
    rho[np.diag_indices(dim)] = rng.random(dim)
    for r, c in coherence_pairs:
        z = rng.normal() + 1j * rng.normal()
        rho[r, c] = z
        rho[c, r] = np.conj(z)
    return rho


# ---------------------------------------------------------------------------
# time-domain correlation quadrature (spectrum oracle)

def time_domain_spectrum(m_dense: np.ndarray, rho_ss: np.ndarray,
                         a: np.ndarray, omegas: np.ndarray,
                         t_max: float, dt: float):
    """S(w) = 2 Re int_0^tmax e^{i w t} tr(a e^{Lt}[rho_ss a+]) dt by trapezoid.

    Propagates the seed with a fixed-step matrix exponential and integrates
    the oscillatory factor numerically; completely independent of the
    resolvent formulation it is used to check.

    Returns (s_values, tail_fraction) where tail_fraction is |C(t_max)|/|C(0)|,
    a measure of how completely the correlation has decayed.
    """
    dim = a.shape[0]
    x = (rho_ss @ a.conj().T).reshape(-1, order="F")
    w_trace = a.T.reshape(-1, order="F")
    n_steps = int(round(t_max / dt))
    prop = la.expm(m_dense * dt)
    cs = np.empty(n_steps + 1, dtype=complex)
    cs[0] = np.dot(w_trace, x)
    for k in range(1, n_steps + 1):
        x = prop @ x
        cs[k] = np.dot(w_trace, x)
    taus = np.arange(n_steps + 1) * dt
    s = np.empty(omegas.size)
    for i, w in enumerate(omegas):
        s[i] = 2.0 * np.real(np.trapezoid(np.exp(1j * w * taus) * cs, taus))
    tail = abs(cs[-1]) / abs(cs[0]) if abs(cs[0]) > 0 else 0.0
    return s, tail


def normalized(omegas: np.ndarray, s: np.ndarray) -> np.ndarray:
    return s / np.trapezoid(s, omegas)
