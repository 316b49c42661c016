import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairwalk.chain import (
    ChainSpec, InitialCondition, TwoParticleState, apply_hamiltonian, build_initial_state,
    deindex, flat_index, projector_weights, sector_states, swap_apply,
)
from pairwalk.errors import DegenerateStateError, InputError
from pairwalk.oracle import build_dense

from conftest import antisymmetric_state, random_state


def unit(n_sites, m, n):
    f = np.zeros(n_sites * n_sites, dtype=complex)
    f[flat_index(m, n, n_sites)] = 1.0
    return TwoParticleState(f, n_sites)


def test_flat_index_examples():
    assert flat_index(0, 0, 5) == 0
    assert flat_index(2, 3, 5) == 13


def test_flat_index_bijection():
    N = 7
    seen = set()
    for m in range(N):
        for n in range(N):
            k = flat_index(m, n, N)
            assert deindex(k, N) == (m, n)
            seen.add(k)
    assert seen == set(range(N * N))


@pytest.mark.parametrize("m,n", [(-1, 0), (0, 5), (5, 5)])
def test_flat_index_out_of_range(m, n):
    with pytest.raises(InputError):
        flat_index(m, n, 5)


@pytest.mark.parametrize("kwargs,key", [
    (dict(n_sites=0), "n_sites"),
    (dict(n_sites=3, hopping=0.0), "j"),
    (dict(n_sites=3, interaction=-1.0), "u"),
])
def test_chain_spec_validation(kwargs, key):
    with pytest.raises(InputError) as exc:
        ChainSpec(**kwargs)
    assert exc.value.key == key


def test_symmetric_neighbor_input():
    N = 300
    f = build_initial_state(ChainSpec(N), InitialCondition(150, 151, 0.0)).amplitudes
    assert f[flat_index(149, 150, N)] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert f[flat_index(150, 149, N)] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert np.count_nonzero(f) == 2


def test_bound_input():
    N = 300
    f = build_initial_state(ChainSpec(N), InitialCondition(150, 150, 0.0)).amplitudes
    assert f[flat_index(149, 149, N)] == 1.0
    assert np.count_nonzero(f) == 1


def test_antisymmetric_input_signs():
    f = build_initial_state(ChainSpec(4), InitialCondition(1, 2, math.pi)).amplitudes
    assert abs(f[flat_index(0, 1, 4)] - 1 / math.sqrt(2)) < 1e-15
    assert abs(f[flat_index(1, 0, 4)] + 1 / math.sqrt(2)) < 1e-15


def test_bound_input_with_phase_is_renormalized():
    s = build_initial_state(ChainSpec(5), InitialCondition(3, 3, 2.0))
    assert abs(s.norm_squared() - 1) < 1e-12
    assert abs(abs(s.amplitudes[flat_index(2, 2, 5)]) - 1) < 1e-12


def test_bound_input_at_pi_is_null():
    with pytest.raises(DegenerateStateError) as exc:
        build_initial_state(ChainSpec(5), InitialCondition(3, 3, math.pi))
    assert exc.value.key == "theta"


@pytest.mark.parametrize("m0,n0,key", [(0, 2, "m0"), (2, 6, "n0")])
def test_initial_sites_out_of_range(m0, n0, key):
    with pytest.raises(InputError) as exc:
        build_initial_state(ChainSpec(5), InitialCondition(m0, n0, 0.0))
    assert exc.value.key == key


def test_product_input():
    s = build_initial_state(ChainSpec(6), InitialCondition(2, 3, None))
    assert s.amplitudes[flat_index(1, 2, 6)] == 1.0
    assert np.count_nonzero(s.amplitudes) == 1
    assert projector_weights(s) == pytest.approx((0.5, 0.5), abs=1e-15)


@pytest.mark.parametrize("theta", [None, 0.0, 0.9, math.pi])
@pytest.mark.parametrize("sites", [(2, 3), (4, 4)])
def test_sector_split_reconstructs_input(theta, sites):
    if sites[0] == sites[1] and theta == math.pi:
        return
    spec = ChainSpec(6)
    ic = InitialCondition(*sites, theta)
    ws, ps, wa, pa = sector_states(spec, ic)
    v = ws * ps.amplitudes + (0 if pa is None else wa * pa.amplitudes)
    assert np.max(np.abs(v - build_initial_state(spec, ic).amplitudes)) < 1e-15


def test_hamiltonian_n2_corner():
    out = apply_hamiltonian(ChainSpec(2, 1.0, 0.0), unit(2, 0, 0)).amplitudes
    expect = np.zeros(4)
    expect[flat_index(1, 0, 2)] = expect[flat_index(0, 1, 2)] = 1.0
    assert np.array_equal(out, expect)


def test_hamiltonian_n2_doubly_occupied():
    out = apply_hamiltonian(ChainSpec(2, 1.0, 7.0), unit(2, 1, 1)).amplitudes
    expect = np.zeros(4)
    expect[flat_index(1, 1, 2)] = 7.0
    expect[flat_index(0, 1, 2)] = expect[flat_index(1, 0, 2)] = 1.0
    assert np.array_equal(out, expect)


def test_energy_matches_dense():
    spec = ChainSpec(10, 1.0, 4.0)
    rng = np.random.default_rng(7)
    v = rng.normal(size=100) + 1j * rng.normal(size=100)
    v /= np.linalg.norm(v)
    e = np.vdot(v, apply_hamiltonian(spec, TwoParticleState(v, 10)).amplitudes)
    assert abs(e.imag) < 1e-12
    # frozen from the dense oracle
    assert abs(e.real - 0.3908671423308514) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(InputError):
        apply_hamiltonian(ChainSpec(4), random_state(3, 0))


sizes = st.integers(min_value=1, max_value=12)
seeds = st.integers(min_value=0, max_value=2**31)
interactions = st.floats(min_value=0, max_value=60)


@given(sizes, interactions, seeds)
def test_hamiltonian_hermitian(N, U, seed):
    spec = ChainSpec(N, 1.0, U)
    u, v = random_state(N, seed), random_state(N, seed + 1)
    uhv = np.vdot(u.amplitudes, apply_hamiltonian(spec, v).amplitudes)
    vhu = np.vdot(v.amplitudes, apply_hamiltonian(spec, u).amplitudes)
    assert abs(uhv - np.conj(vhu)) < 1e-12


@given(sizes, interactions, seeds)
def test_hamiltonian_commutes_with_swap(N, U, seed):
    spec = ChainSpec(N, 1.0, U)
    psi = random_state(N, seed)
    a = swap_apply(apply_hamiltonian(spec, psi)).amplitudes
    b = apply_hamiltonian(spec, swap_apply(psi)).amplitudes
    assert np.max(np.abs(a - b)) < 1e-12


@given(sizes, interactions, seeds)
def test_hamiltonian_matches_dense(N, U, seed):
    spec = ChainSpec(N, 1.3, U)
    psi = random_state(N, seed)
    dense = build_dense(spec).matrix @ psi.amplitudes
    assert np.max(np.abs(apply_hamiltonian(spec, psi).amplitudes - dense)) < 1e-12


@given(st.integers(min_value=2, max_value=12), st.sampled_from(["first", "last"]), seeds)
def test_boundary_no_wraparound(N, edge, seed):
    # particle a sits on an edge site, particle b anywhere
    rng = np.random.default_rng(seed)
    k = 0 if edge == "first" else N - 1
    f = np.zeros((N, N), dtype=complex)
    f[k, :] = rng.normal(size=N)
    psi = TwoParticleState.from_matrix(f)
    spec = ChainSpec(N, 1.0, 3.0)
    out = apply_hamiltonian(spec, psi).matrix
    dense = (build_dense(spec).matrix @ psi.amplitudes).reshape(N, N)
    assert np.max(np.abs(out - dense)) < 1e-12
    if N > 2:
        assert not np.any(out[N - 1 - k, :])


@given(sizes, seeds, st.floats(min_value=0, max_value=50))
def test_interaction_invisible_to_antisymmetric_states(N, seed, U):
    if N < 2:
        return
    psi = antisymmetric_state(N, seed)
    a = apply_hamiltonian(ChainSpec(N, 1.0, 0.0), psi).amplitudes
    b = apply_hamiltonian(ChainSpec(N, 1.0, U), psi).amplitudes
    assert np.max(np.abs(a - b)) < 1e-12


@given(sizes, seeds)
def test_projector_weights_sum_to_one(N, seed):
    w_sym, w_anti = projector_weights(random_state(N, seed))
    assert abs(w_sym + w_anti - 1) < 1e-12


@pytest.mark.parametrize("theta,expected", [(0.0, (1.0, 0.0)), (math.pi, (0.0, 1.0)),
                                            (math.pi / 2, (0.5, 0.5))])
def test_projector_weights_examples(theta, expected):
    s = build_initial_state(ChainSpec(8), InitialCondition(3, 4, theta))
    assert projector_weights(s) == pytest.approx(expected, abs=1e-12)


def test_swap_examples():
    s = swap_apply(unit(8, 2, 5))
    assert s.amplitudes[flat_index(5, 2, 8)] == 1.0
    sym = build_initial_state(ChainSpec(8), InitialCondition(3, 4, 0.0))
    assert abs(np.vdot(sym.amplitudes, swap_apply(sym).amplitudes) - 1) < 1e-12
    anti = build_initial_state(ChainSpec(8), InitialCondition(3, 4, math.pi))
    assert abs(np.vdot(anti.amplitudes, swap_apply(anti).amplitudes) + 1) < 1e-12


@given(sizes, seeds)
def test_swap_is_involution(N, seed):
    psi = random_state(N, seed)
    assert np.array_equal(swap_apply(swap_apply(psi)).amplitudes, psi.amplitudes)
