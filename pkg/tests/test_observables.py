import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairwalk.chain import ChainSpec, InitialCondition, TwoParticleState, build_initial_state
from pairwalk.observables import (
    ReducedDensityMatrix, correlation_map, l1_coherence, observe, purity, purity_decomposition,
    reduce_to_particle_a,
)
from pairwalk.oracle import build_dense, dense_partial_trace, spectral_evolve
from pairwalk.propagator import PropagatorConfig, advance

from conftest import random_state

seeds = st.integers(min_value=0, max_value=2**31)


def test_product_state_is_pure():
    s = build_initial_state(ChainSpec(6), InitialCondition(2, 5, None))
    rho = reduce_to_particle_a(s).entries
    expect = np.zeros((6, 6))
    expect[1, 1] = 1.0
    assert np.array_equal(rho, expect)
    assert purity(rho) == 1.0


@pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 2, math.pi])
def test_neighbor_input_gives_half(theta):
    s = build_initial_state(ChainSpec(4), InitialCondition(1, 2, theta))
    rho = reduce_to_particle_a(s).entries
    expect = np.diag([0.5, 0.5, 0.0, 0.0])
    assert np.max(np.abs(rho - expect)) < 1e-15
    assert abs(purity(rho) - 0.5) < 1e-15


def test_gram_matches_dense_trace_after_evolution():
    spec = ChainSpec(10, 1.0, 4.0)
    s = advance(spec, random_state(10, 5), PropagatorConfig(), 300)
    a = reduce_to_particle_a(s).entries
    b = dense_partial_trace(s).entries
    assert np.max(np.abs(a - b)) < 1e-12


def test_purity_examples():
    assert abs(purity(np.eye(300) / 300) - 1 / 300) < 1e-15
    v = np.ones(5) / math.sqrt(5)
    assert abs(purity(np.outer(v, v)) - 1) < 1e-15
    assert purity(np.diag([0.5, 0.5])) == 0.5


def test_decomposition_examples():
    p = np.array([0.5, 0.3, 0.2])
    assert purity_decomposition(np.diag(p)) == pytest.approx((np.sum(p**2), 0.0), abs=1e-15)
    v = np.array([1.0, 1.0]) / math.sqrt(2)
    assert purity_decomposition(np.outer(v, v)) == pytest.approx((0.5, 0.5), abs=1e-15)


def test_l1_examples():
    assert l1_coherence(np.diag([0.2, 0.8])) == 0.0
    N = 9
    v = np.ones(N) / math.sqrt(N)
    assert abs(l1_coherence(np.outer(v, v)) - (N - 1)) < 1e-12
    assert l1_coherence(np.array([[0.5, 0.25], [0.25, 0.5]])) == 0.5


def test_correlation_map_examples():
    s = build_initial_state(ChainSpec(5), InitialCondition(2, 4, 0.0))
    probs = correlation_map(s)
    assert probs[1, 3] == pytest.approx(0.5) and probs[3, 1] == pytest.approx(0.5)
    assert abs(probs.sum() - 1) < 1e-15


def test_antisymmetric_correlation_map():
    spec = ChainSpec(12, 1.0, 0.0)
    s0 = build_initial_state(spec, InitialCondition(6, 7, math.pi))
    probs = correlation_map(advance(spec, s0, PropagatorConfig(), 200))
    assert np.max(np.abs(probs - probs.T)) <= 1e-10
    assert np.max(np.abs(np.diagonal(probs))) <= 1e-10
    assert abs(probs.sum() - 1) < 1e-12


def _random_rho(N, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@given(st.integers(min_value=1, max_value=12), seeds)
def test_rho_invariants(N, seed):
    rho = reduce_to_particle_a(random_state(N, seed)).entries
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() >= -1e-10
    g = purity(rho)
    assert 1 / N - 1e-12 <= g <= 1 + 1e-10
    assert 0 <= l1_coherence(rho) <= N - 1 + 1e-10
    d, o = purity_decomposition(rho)
    assert abs(d + o - g) < 1e-12


@given(st.integers(min_value=1, max_value=12), seeds)
def test_purity_is_trace_of_square(N, seed):
    rho = reduce_to_particle_a(random_state(N, seed)).entries
    assert abs(purity(rho) - np.trace(rho @ rho).real) < 1e-12


@given(st.integers(min_value=2, max_value=12), seeds)
def test_coherence_measures_relation(N, seed):
    rho = _random_rho(N, seed)
    off = rho - np.diag(np.diagonal(rho))
    _, g_off = purity_decomposition(rho)
    c = l1_coherence(rho)
    assert g_off <= 2 * c * np.max(np.abs(off)) + 1e-15
    diag = np.diag(np.diagonal(rho).real)
    assert purity_decomposition(diag)[1] == 0.0 and l1_coherence(diag) == 0.0


@given(st.integers(min_value=1, max_value=12), seeds, st.floats(min_value=0, max_value=2 * math.pi))
def test_global_phase_invariance(N, seed, phi):
    s = random_state(N, seed)
    t = TwoParticleState(np.exp(1j * phi) * s.amplitudes, N)
    ra, rb = reduce_to_particle_a(s).entries, reduce_to_particle_a(t).entries
    assert np.max(np.abs(ra - rb)) < 1e-12
    assert abs(purity(ra) - purity(rb)) < 1e-12
    assert abs(l1_coherence(ra) - l1_coherence(rb)) < 1e-12


def test_observe_record():
    s = build_initial_state(ChainSpec(5), InitialCondition(2, 3, math.pi / 2))
    r = observe(0.0, s)
    assert r.gamma_a == pytest.approx(0.5)
    assert r.gamma_offdiag == 0.0 and r.c_l1 == 0.0
    assert r.norm_error == pytest.approx(0.0, abs=1e-15)
    assert (r.w_sym, r.w_antisym) == pytest.approx((0.5, 0.5))


@pytest.mark.parametrize("U,gamma,c_l1,gamma_diag", [
    # frozen from the dense oracle (eigh evolution + index-contraction trace)
    (0.0, 0.5000000000000001, 4.340175718966249, 0.16070615234926786),
    (4.0, 0.26938896929182615, 2.8946246654331964, 0.14057527175459603),
    (10.0, 0.33360367516560646, 3.0959324441514116, 0.15105723557601689),
    (50.0, 0.3461971794046434, 2.9971479402759904, 0.16025453986729887),
])
def test_observables_at_t5_n10(U, gamma, c_l1, gamma_diag):
    spec = ChainSpec(10, 1.0, U)
    s = advance(spec, build_initial_state(spec, InitialCondition(5, 6, 0.0)), PropagatorConfig(), 500)
    r = observe(5.0, s)
    assert abs(r.gamma_a - gamma) < 1e-10
    assert abs(r.c_l1 - c_l1) < 1e-10
    assert abs(r.gamma_diag - gamma_diag) < 1e-10
