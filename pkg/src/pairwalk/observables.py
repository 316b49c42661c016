"""Single-particle reduced density matrix and the scalar diagnostics built on it.

Nothing here diagonalizes anything: purity, its diagonal/off-diagonal split
and the l1-norm of coherence all come straight from matrix elements.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .chain import TwoParticleState, projector_weights


@dataclass
class ReducedDensityMatrix:
    entries: np.ndarray
    n_sites: int

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    gamma_a: float
    gamma_diag: float
    gamma_offdiag: float
    c_l1: float
    norm_error: float
    w_sym: float
    w_antisym: float

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_tuple(self) -> tuple[float, ...]:
        return astuple(self)


def _entries(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho)


def reduce_to_particle_a(state: TwoParticleState) -> ReducedDensityMatrix:
    """rho_a[m, m'] = sum_n f[m, n] conj(f[m', n]), i.e. the Gram matrix F F^dagger."""
    f = state.matrix
    rho = f @ f.conj().T
    return ReducedDensityMatrix(rho, state.n_sites)


def purity(rho) -> float:
    r = _entries(rho)
    return float(np.sum(r.real**2 + r.imag**2))


def purity_decomposition(rho) -> tuple[float, float]:
    """Diagonal and off-diagonal contributions; they add up to the purity.

    The off-diagonal part counts every Hermitian pair once per ordering,
    ``2 * sum_{i<k} |rho_ik|^2``.
    """
    r = _entries(rho)
    abs2 = r.real**2 + r.imag**2
    gamma_diag = float(np.sum(np.diagonal(abs2)))
    gamma_offdiag = float(2.0 * np.sum(np.triu(abs2, k=1)))
    return gamma_diag, gamma_offdiag


def l1_coherence(rho) -> float:
    r = _entries(rho)
    mag = np.abs(r)
    np.fill_diagonal(mag, 0.0)
    return float(np.sum(mag))


def correlation_map(state: TwoParticleState) -> np.ndarray:
    """Joint site-occupation probabilities ``|f[m, n]|^2``."""
    f = state.matrix
    return f.real**2 + f.imag**2


def observe(t: float, state: TwoParticleState) -> ObservableRecord:
    rho = reduce_to_particle_a(state)
    gamma_diag, gamma_offdiag = purity_decomposition(rho)
    w_sym, w_anti = projector_weights(state)
    return ObservableRecord(
        t=float(t),
        gamma_a=purity(rho),
        gamma_diag=gamma_diag,
        gamma_offdiag=gamma_offdiag,
        c_l1=l1_coherence(rho),
        norm_error=1.0 - state.norm_squared(),
        w_sym=w_sym,
        w_antisym=w_anti,
    )
