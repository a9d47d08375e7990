"""Vectorized master-equation generator and steady-state solvers.

Density operators are column-stacked (order='F'), so vec(A rho B) =
kron(B.T, A) vec(rho).  The generator is assembled in sparse form straight
from the Lindblad definition; the per-element rate equations quoted in the
test oracles are never used for construction, only for cross-checking.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConfigurationError,
    DegenerateSteadyStateError,
    NumericalError,
    TruncationFailureError,
)
from .models import ModelSpec

# above this many vectorized rows we skip the dense SVD rank check and use
# the two-pivot agreement probe instead (an SVD there costs minutes)
_SVD_CHECK_LIMIT = 1100
_DENSE_LIMIT = 6000  # largest dim^2 we will densify on request


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(x: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape((dim, dim), order="F")


@dataclass
class Generator:
    """The master-equation superoperator as a dim^2 x dim^2 sparse matrix."""

    matrix: sp.csr_matrix
    model: ModelSpec
    _dense_cache: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        if self._dense_cache is None:
            if self.size > _DENSE_LIMIT:
                raise NumericalError(
                    f"refusing to densify a {self.size}x{self.size} generator; "
                    "use the sparse matrix or a reduced sector")
            self._dense_cache = self.matrix.toarray()
        return self._dense_cache

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action of the generator on a density operator (matrix in, matrix out)."""
        return unvec(self.matrix @ vec(rho), self.dim)


@dataclass
class SteadyState:
    """Normalized stationary density matrix plus solve diagnostics."""

    rho: np.ndarray
    model: ModelSpec
    residual: float
    top_population: float

    @property
    def n_max(self) -> int:
        return self.model.space.n_max

    def photon_distribution(self) -> np.ndarray:
        """Marginal photon-number probabilities p(n)."""
        space = self.model.space
        pops = np.real(np.diag(self.rho))
        p = np.zeros(space.n_max + 1)
        for i, (_, n) in enumerate(space.basis_labels()):
            p[n] += pops[i]
        return p


def build_generator(model: ModelSpec) -> Generator:
    """Assemble the Lindblad superoperator for a model.

    L(rho) = -i[H, rho] + sum_k rate_k (c rho c^dag - {c^dag c, rho}/2)
    with bare collapse operators c and their rates kept separate.
    """
    dim = model.dim
    if model.hamiltonian.data.shape != (dim, dim):
        raise ConfigurationError("Hamiltonian dimension does not match the state space")
    ident = sp.identity(dim, dtype=complex, format="csr")
    h = sp.csr_matrix(model.hamiltonian.data)
    m = -1j * (sp.kron(ident, h, format="csr") - sp.kron(h.T, ident, format="csr"))
    for op, rate in model.collapses:
        if op.data.shape != (dim, dim):
            raise ConfigurationError("collapse operator dimension mismatch")
        if rate == 0.0:
            continue
        c = sp.csr_matrix(op.data)
        cdc = (c.conj().T @ c).tocsr()
        m = m + rate * (
            sp.kron(c.conj(), c, format="csr")
            - 0.5 * sp.kron(ident, cdc, format="csr")
            - 0.5 * sp.kron(cdc.T, ident, format="csr")
        )
    return Generator(matrix=m.tocsr(), model=model)


def _trace_row_indices(dim: int) -> np.ndarray:
    """Column-stacked positions of the diagonal elements rho_ii."""
    return np.arange(dim) * (dim + 1)


def _solve_with_replaced_row(matrix: sp.csr_matrix, dim: int, replace_at: int) -> np.ndarray:
    """Solve L vec(rho) = 0 with one diagonal-element row swapped for tr rho = 1.

    The diagonal rows of L are linearly dependent (trace preservation), so
    replacing one of them keeps full information and the trace row removes
    the scale freedom.
    """
    n = matrix.shape[0]
    lil = matrix.tolil(copy=True)
    lil.rows[replace_at] = list(_trace_row_indices(dim))
    lil.data[replace_at] = [1.0 + 0.0j] * dim
    system = lil.tocsc()
    rhs = np.zeros(n, dtype=complex)
    rhs[replace_at] = 1.0
    try:
        lu = spla.splu(system)
        x = lu.solve(rhs)
    except RuntimeError as exc:  # singular factorization
        raise DegenerateSteadyStateError(
            f"steady-state system is singular ({exc}); the generator kernel "
            "is not one-dimensional") from exc
    if not np.all(np.isfinite(x)):
        raise NumericalError("steady-state solve returned non-finite values")
    return x


def _kernel_rank_deficiency(matrix: sp.csr_matrix) -> int:
    """Dense SVD kernel dimension with tolerance 1e-8 * ||L||_2."""
    dense = matrix.toarray()
    svals = np.linalg.svd(dense, compute_uv=False)
    tol = 1e-8 * svals[0]
    return int(np.sum(svals <= tol))


def steady_state(gen: Generator, residual_tol: float = 1e-10) -> SteadyState:
    """Unique trace-one stationary state of the generator.

    Solves the trace-replaced linear system, symmetrizes, and verifies the
    residual against the raw (unreplaced) generator.  Kernel degeneracy is
    reported, never resolved silently: small systems get an exact SVD rank
    check, large ones a two-pivot agreement probe.
    """
    dim = gen.dim
    n = gen.size
    x0 = _solve_with_replaced_row(gen.matrix, dim, replace_at=0)

    if n <= _SVD_CHECK_LIMIT:
        deficiency = _kernel_rank_deficiency(gen.matrix)
        if deficiency != 1:
            raise DegenerateSteadyStateError(
                f"generator kernel dimension is {deficiency}, expected 1")
    else:
        # a second solve pinned at a different diagonal element must agree
        alt_row = int(_trace_row_indices(dim)[-1])
        x1 = _solve_with_replaced_row(gen.matrix, dim, replace_at=alt_row)
        if np.max(np.abs(x0 - x1)) > 1e-8 * max(1.0, np.max(np.abs(x0))):
            raise DegenerateSteadyStateError(
                "steady-state solves pinned at different rows disagree; "
                "the generator kernel is not one-dimensional")

    rho = unvec(x0, dim)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if abs(trace) < 1e-12:
        raise NumericalError("steady-state candidate has vanishing trace")
    rho = rho / trace

    residual = float(np.max(np.abs(gen.matrix @ vec(rho))))
    if residual > residual_tol:
        raise NumericalError(
            f"steady-state residual {residual:.3e} exceeds {residual_tol:.1e}",
            residual=residual)

    space = gen.model.space
    pops = np.real(np.diag(rho))
    top = float(sum(pops[space.flat_index(j, space.n_max)]
                    for j in range(1, space.n_levels + 1)))
    return SteadyState(rho=rho, model=gen.model, residual=residual, top_population=top)


def solve_with_adaptive_truncation(
    model_factory,
    start_n_max: int = 4,
    top_tol: float = 1e-4,
    ceiling: int = 60,
    step: int = 2,
):
    """Grow n_max until the top photon sector is negligibly occupied.

    model_factory maps an n_max to a ModelSpec.  The truncation is accepted
    once the summed population of the highest photon sector drops below
    top_tol; n_max advances by `step` per round (halving the number of
    re-solves relative to unit increments costs at most one extra sector).

    Returns (SteadyState, Generator) for the accepted truncation.
    """
    if start_n_max < 1:
        raise ConfigurationError(f"start_n_max must be >= 1, got {start_n_max}")
    n_max = start_n_max
    last = None
    while True:
        model = model_factory(n_max)
        gen = build_generator(model)
        ss = steady_state(gen)
        last = (ss, gen)
        if ss.top_population < top_tol:
            return last
        if n_max >= ceiling:
            raise TruncationFailureError(
                f"photon truncation still insufficient at n_max={n_max} "
                f"(top sector population {ss.top_population:.3e})",
                n_max=n_max, top_population=ss.top_population)
        n_max = min(n_max + step, ceiling)


def propagate(gen: Generator, rho0: np.ndarray, times) -> list[np.ndarray]:
    """Dense exp(L t) propagation of an initial state; small systems only."""
    import scipy.linalg as la

    dense = gen.dense()
    out = []
    x0 = vec(rho0)
    for t in np.atleast_1d(times):
        if t == 0.0:
            out.append(unvec(x0, gen.dim))
            continue
        prop = la.expm(dense * float(t))
        out.append(unvec(prop @ x0, gen.dim))
    return out
