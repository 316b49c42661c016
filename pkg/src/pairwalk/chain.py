"""Two distinguishable particles on an open chain.

The two-particle amplitudes ``f[m, n]`` (particle a on site ``m``, particle b
on site ``n``) are stored as a dense flat vector of length ``N**2`` with
``idx(m, n) = m * N + n``.  Site indices are 0-based here; the CLI and CSV
files use 1-based sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError, InputError

NULL_PHASE_TOL = 1e-9


@dataclass(frozen=True)
class ChainSpec:
    """Lattice size, hopping and on-site interaction (energies in units of J)."""

    n_sites: int
    hopping: float = 1.0
    interaction: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 1:
            raise InputError(f"n_sites must be an integer >= 1, got {self.n_sites!r}", "n_sites")
        if not (math.isfinite(self.hopping) and self.hopping > 0):
            raise InputError(f"hopping must be > 0, got {self.hopping!r}", "j")
        if not (math.isfinite(self.interaction) and self.interaction >= 0):
            raise InputError(f"interaction must be >= 0, got {self.interaction!r}", "u")

    def with_interaction(self, u: float) -> "ChainSpec":
        return ChainSpec(self.n_sites, self.hopping, u)


@dataclass(frozen=True)
class InitialCondition:
    """Sites ``m0``, ``n0`` (1-based) and the exchange phase ``theta``.

    ``theta=None`` selects the unsymmetrized product input ``|m0, n0>``.
    """

    m0: int
    n0: int
    theta: float | None = 0.0

    @property
    def is_product(self) -> bool:
        return self.theta is None

    def validate(self, n_sites: int) -> None:
        for key, site in (("m0", self.m0), ("n0", self.n0)):
            if int(site) != site or not 1 <= site <= n_sites:
                raise InputError(f"{key}={site!r} outside [1, {n_sites}]", key)
        if self.theta is None:
            return
        if not math.isfinite(self.theta):
            raise InputError(f"theta must be finite, got {self.theta!r}", "theta")
        if self.m0 == self.n0 and abs(1 + np.exp(1j * self.theta)) <= NULL_PHASE_TOL:
            raise DegenerateStateError(
                f"m0 = n0 = {self.m0} with theta = {self.theta!r} gives the null state", "theta"
            )

    def with_theta(self, theta: float | None) -> "InitialCondition":
        return InitialCondition(self.m0, self.n0, theta)


@dataclass
class TwoParticleState:
    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.size != self.n_sites**2:
            raise InputError(
                f"expected {self.n_sites**2} amplitudes for N={self.n_sites}, "
                f"got {self.amplitudes.size}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """``(N, N)`` view with rows indexed by particle a."""
        return self.amplitudes.reshape(self.n_sites, self.n_sites)

    @classmethod
    def from_matrix(cls, f: np.ndarray) -> "TwoParticleState":
        f = np.asarray(f)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise InputError(f"amplitude matrix must be square, got shape {f.shape}")
        return cls(f.reshape(-1).copy(), f.shape[0])

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "TwoParticleState":
        return TwoParticleState(self.amplitudes.copy(), self.n_sites)


def _check_dims(spec: ChainSpec, state: TwoParticleState) -> None:
    if state.n_sites != spec.n_sites:
        raise InputError(f"state has N={state.n_sites}, chain has N={spec.n_sites}")


def flat_index(m: int, n: int, n_sites: int) -> int:
    if not (0 <= m < n_sites and 0 <= n < n_sites):
        raise InputError(f"site pair ({m}, {n}) outside [0, {n_sites})")
    return m * n_sites + n


def deindex(idx: int, n_sites: int) -> tuple[int, int]:
    if not 0 <= idx < n_sites * n_sites:
        raise InputError(f"flat index {idx} outside [0, {n_sites * n_sites})")
    return divmod(idx, n_sites)


def build_initial_state(spec: ChainSpec, ic: InitialCondition) -> TwoParticleState:
    """(|m0,n0> + e^{i theta}|n0,m0>)/sqrt(2), renormalized when m0 == n0.

    A product input (``theta=None``) is the single basis state |m0,n0>.
    """
    ic.validate(spec.n_sites)
    N = spec.n_sites
    f = np.zeros(N * N, dtype=np.complex128)
    i, k = ic.m0 - 1, ic.n0 - 1
    if ic.is_product:
        f[flat_index(i, k, N)] = 1.0
        return TwoParticleState(f, N)
    phase = np.exp(1j * ic.theta)
    if i != k:
        f[flat_index(i, k, N)] = 1 / math.sqrt(2)
        f[flat_index(k, i, N)] = phase / math.sqrt(2)
    else:
        amp = (1 + phase) / math.sqrt(2)
        f[flat_index(i, i, N)] = amp / abs(amp)
    return TwoParticleState(f, N)


def sector_states(spec: ChainSpec, ic: InitialCondition):
    """Split the phased input into exchange-symmetric and antisymmetric parts.

    Returns ``(weight_sym, psi_sym, weight_anti, psi_anti)`` with
    ``psi(theta) = weight_sym * psi_sym + weight_anti * psi_anti``.  For a
    bound input ``psi_anti`` is ``None`` and ``weight_sym`` carries the phase.
    A product input splits with equal weights ``1/sqrt(2)``.
    """
    ic.validate(spec.n_sites)
    N = spec.n_sites
    i, k = ic.m0 - 1, ic.n0 - 1
    phase = 1.0 if ic.is_product else np.exp(1j * ic.theta)
    if i == k:
        amp = (1 + phase) / math.sqrt(2)
        unit = np.zeros(N * N, dtype=np.complex128)
        unit[flat_index(i, i, N)] = 1.0
        return amp / abs(amp), TwoParticleState(unit, N), 0.0, None
    sym = np.zeros(N * N, dtype=np.complex128)
    anti = np.zeros(N * N, dtype=np.complex128)
    sym[flat_index(i, k, N)] = sym[flat_index(k, i, N)] = 1 / math.sqrt(2)
    anti[flat_index(i, k, N)] = 1 / math.sqrt(2)
    anti[flat_index(k, i, N)] = -1 / math.sqrt(2)
    if ic.is_product:
        w = 1 / math.sqrt(2)
        return w, TwoParticleState(sym, N), w, TwoParticleState(anti, N)
    return (
        (1 + phase) / 2,
        TwoParticleState(sym, N),
        (1 - phase) / 2,
        TwoParticleState(anti, N),
    )


def apply_hamiltonian(spec: ChainSpec, state: TwoParticleState) -> TwoParticleState:
    """Return H|psi> with open boundaries, without forming the N^2 x N^2 matrix.

    Hopping moves either particle by one site with amplitude ``+J``; the
    on-site term ``U`` acts only on the doubly occupied entries ``f[m, m]``.
    """
    _check_dims(spec, state)
    f = state.matrix
    out = np.zeros_like(f)
    out[1:, :] += f[:-1, :]
    out[:-1, :] += f[1:, :]
    out[:, 1:] += f[:, :-1]
    out[:, :-1] += f[:, 1:]
    out *= spec.hopping
    if spec.interaction:
        idx = np.arange(spec.n_sites)
        out[idx, idx] += spec.interaction * f[idx, idx]
    return TwoParticleState(out.reshape(-1), spec.n_sites)


def swap_apply(state: TwoParticleState) -> TwoParticleState:
    """Exchange the particle labels: ``g[m, n] = f[n, m]``."""
    return TwoParticleState.from_matrix(state.matrix.T)


def projector_weights(state: TwoParticleState) -> tuple[float, float]:
    """Weights of the state in the symmetric and antisymmetric sectors."""
    f = state.matrix
    upper = np.triu_indices(state.n_sites, k=1)
    plus = (f + f.T)[upper] / math.sqrt(2)
    minus = (f - f.T)[upper] / math.sqrt(2)
    w_sym = float(np.sum(np.abs(plus) ** 2) + np.sum(np.abs(np.diagonal(f)) ** 2))
    w_anti = float(np.sum(np.abs(minus) ** 2))
    return w_sym, w_anti
