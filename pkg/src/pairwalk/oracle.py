"""Dense brute-force backend for small chains.

Builds the full ``N^2 x N^2`` Hamiltonian, evolves by exact diagonalization
and traces out particle b by index contraction.  It exists to certify the
matrix-free path and is exposed through ``pairwalk verify``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec, TwoParticleState, _check_dims
from .errors import InputError, NumericalFailure
from .observables import ReducedDensityMatrix

MAX_ORACLE_SITES = 40


@dataclass
class DenseHamiltonian:
    matrix: np.ndarray
    spec: ChainSpec
    _eig: tuple[np.ndarray, np.ndarray] | None = None

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            try:
                self._eig = np.linalg.eigh(self.matrix)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
        return self._eig


def _guard(n_sites: int) -> None:
    if n_sites > MAX_ORACLE_SITES:
        raise InputError(
            f"dense oracle limited to N <= {MAX_ORACLE_SITES}, got N={n_sites}", "n_sites"
        )


def single_particle_hopping(n_sites: int, hopping: float = 1.0) -> np.ndarray:
    t = np.zeros((n_sites, n_sites))
    i = np.arange(n_sites - 1)
    t[i, i + 1] = t[i + 1, i] = hopping
    return t


def build_dense(spec: ChainSpec) -> DenseHamiltonian:
    N = spec.n_sites
    _guard(N)
    t = single_particle_hopping(N, spec.hopping)
    eye = np.eye(N)
    h = np.kron(t, eye) + np.kron(eye, t)
    doubly = np.arange(N) * (N + 1)
    h[doubly, doubly] += spec.interaction
    return DenseHamiltonian(h.astype(np.complex128), spec)


def spectral_evolve(h: DenseHamiltonian, state0: TwoParticleState, t: float) -> TwoParticleState:
    """V exp(-i E t) V^dagger psi0."""
    _check_dims(h.spec, state0)
    energies, vecs = h.eigh()
    coeffs = vecs.conj().T @ state0.amplitudes
    out = vecs @ (np.exp(-1j * energies * t) * coeffs)
    return TwoParticleState(out, state0.n_sites)


def dense_partial_trace(state: TwoParticleState) -> ReducedDensityMatrix:
    N = state.n_sites
    _guard(N)
    psi = state.amplitudes
    rho_ab = np.outer(psi, psi.conj()).reshape(N, N, N, N)
    return ReducedDensityMatrix(np.einsum("anbn->ab", rho_ab), N)
