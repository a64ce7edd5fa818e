import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rpphoton.spin import (
    SpinSpec,
    SpinSpecError,
    TraceFloorError,
    build_system,
    coherence_measure,
    decompose,
    hyperfine_hamiltonian,
    spin_matrices,
    zeeman_hamiltonian,
)

from helpers import coherent_state, projector, random_density, random_hermitian

SPECS = [(), (0.5,), (1.0,), (0.5, 1.0), (1.5,), (0.5, 0.5, 0.5)]


@pytest.mark.parametrize(
    "nuclei, dim, tr_s",
    [((), 4, 1), ((0.5,), 8, 2), ((0.5, 1), 24, 6)],
)
def test_dimensions_and_projector_traces(nuclei, dim, tr_s):
    s = build_system(nuclei)
    assert s.dim == dim
    assert np.trace(s.Q_S).real == pytest.approx(tr_s, abs=1e-12)
    assert np.trace(s.Q_T).real == pytest.approx(3 * tr_s, abs=1e-12)


@pytest.mark.parametrize("nuclei", SPECS)
def test_projector_algebra(nuclei):
    s = build_system(nuclei)
    QS, QT, one = s.Q_S, s.Q_T, np.eye(s.dim)
    assert np.abs(QS @ QS - QS).max() < 1e-12
    assert np.abs(QT @ QT - QT).max() < 1e-12
    assert np.abs(QS @ QT).max() < 1e-12
    assert np.abs(QS + QT - one).max() < 1e-12
    assert np.abs(QS - QS.conj().T).max() == 0


def test_singlet_vector_is_in_singlet_subspace():
    s = build_system()
    S = s.electron_state("S")
    assert np.allclose(s.Q_S @ S, S)
    for label in ("T0", "T+", "T-"):
        assert np.allclose(s.Q_S @ s.electron_state(label), 0)


def test_spin_matrices_commutation():
    for spin in (0.5, 1, 1.5, 2):
        sx, sy, sz = spin_matrices(spin)
        assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
        total = sx @ sx + sy @ sy + sz @ sz
        assert np.allclose(total, spin * (spin + 1) * np.eye(len(sz)))


@pytest.mark.parametrize("bad", [(-0.5,), (0.3,), (float("nan"),)])
def test_rejects_non_half_integer_spins(bad):
    with pytest.raises(SpinSpecError):
        SpinSpec(bad)


def test_dimension_cap():
    with pytest.raises(SpinSpecError):
        build_system((0.5,) * 11)
    assert build_system((0.5,) * 3, max_dim=32).dim == 32
    with pytest.raises(SpinSpecError):
        build_system((0.5,) * 3, max_dim=16)


def test_operators_are_read_only():
    s = build_system()
    with pytest.raises(ValueError):
        s.Q_S[0, 0] = 1.0


def test_zeeman_zero_and_symmetric():
    s = build_system((0.5,))
    assert np.all(zeeman_hamiltonian(s, 0.0, 0.0) == 0)
    H = zeeman_hamiltonian(s, 3.0, 3.0)
    assert np.abs(H @ s.Q_S - s.Q_S @ H).max() < 1e-12
    Sz = s.s1[2] + s.s2[2]
    H2 = zeeman_hamiltonian(s, 3.0, -1.0)
    assert np.abs(H2 @ Sz - Sz @ H2).max() < 1e-12
    assert np.allclose(H2, H2.conj().T)


def test_zeeman_rabi_frequency_from_st0_block():
    # Diagonalize the 2x2 {S, T0} block: the S population oscillates as cos^2(w t/2).
    s = build_system()
    w = 2.7
    H = zeeman_hamiltonian(s, w / 2, -w / 2)
    basis = np.stack([s.electron_state("S"), s.electron_state("T0")], axis=1)
    block = basis.conj().T @ H @ basis
    evals = np.linalg.eigvalsh(block)
    assert evals[1] - evals[0] == pytest.approx(w, rel=1e-12)
    assert np.allclose(H @ basis, basis @ block)  # block is invariant


def test_hyperfine_two_spin_eigenvalues():
    s = build_system((0.5,))
    A = 1.3
    H = hyperfine_hamiltonian(s, [(0, 0, A)])
    evals = np.sort(np.linalg.eigvalsh(H))
    expected = np.sort([-0.75 * A] * 2 + [0.25 * A] * 6)
    assert np.allclose(evals, expected, atol=1e-12)
    assert np.all(hyperfine_hamiltonian(s, []) == 0)


def test_hyperfine_exchange_symmetry():
    s = build_system((1.0,))
    H = hyperfine_hamiltonian(s, [(0, 0, 0.7), (1, 0, 0.7)])
    # electron exchange permutes the first two tensor factors
    d = s.dim // 4
    P = np.zeros((s.dim, s.dim))
    for a in range(2):
        for b in range(2):
            for n in range(d):
                P[(b * 2 + a) * d + n, (a * 2 + b) * d + n] = 1
    assert np.abs(P @ H - H @ P).max() < 1e-12


def test_hyperfine_index_errors():
    s = build_system((0.5,))
    with pytest.raises(IndexError):
        hyperfine_hamiltonian(s, [(2, 0, 1.0)])
    with pytest.raises(IndexError):
        hyperfine_hamiltonian(s, [(0, 1, 1.0)])


def test_decompose_examples():
    s = build_system()
    parts = decompose(s, projector(s.electron_state("S")))
    assert np.all(parts.rho_tilde == 0)

    rho = coherent_state(s)
    S, T0 = s.electron_state("S"), s.electron_state("T0")
    expected = (np.outer(S, T0.conj()) + np.outer(T0, S.conj())) / 2
    parts = decompose(s, rho)
    assert np.abs(parts.rho_tilde - expected).max() < 1e-15


@pytest.mark.parametrize("nuclei", SPECS)
def test_decompose_identities(nuclei):
    rng = np.random.default_rng(7)
    s = build_system(nuclei)
    rho = random_hermitian(rng, s.dim)
    parts = decompose(s, rho)
    assert np.abs(parts.rho_bar + parts.rho_tilde - rho).max() < 1e-14
    assert np.abs(s.Q_S @ parts.rho_tilde @ s.Q_S).max() < 1e-12
    assert np.abs(s.Q_T @ parts.rho_tilde @ s.Q_T).max() < 1e-12
    assert np.allclose(parts.rho_tilde, parts.rho_tilde.conj().T)
    assert np.abs(decompose(s, parts.rho_bar).rho_tilde).max() < 1e-12
    assert np.abs(decompose(s, parts.rho_tilde).rho_bar).max() < 1e-12


def test_decompose_shape_mismatch():
    with pytest.raises(ValueError):
        decompose(build_system(), np.eye(8))


def test_coherence_measure_examples():
    s = build_system()
    S, T0 = s.electron_state("S"), s.electron_state("T0")
    assert coherence_measure(s, projector(S)) == 0.0
    assert coherence_measure(s, coherent_state(s)) == pytest.approx(1.0, abs=1e-12)
    mixture = 0.5 * projector(S) + 0.5 * projector(T0)
    assert coherence_measure(s, mixture) == 0.0


def test_coherence_measure_on_superposition_curve():
    s = build_system()
    S, T0 = s.electron_state("S"), s.electron_state("T0")
    thetas = np.linspace(0, np.pi / 2, 41)
    values = [coherence_measure(s, projector(np.cos(t) * S + np.sin(t) * T0)) for t in thetas]
    assert values[0] == 0.0
    assert values[-1] == pytest.approx(0.0, abs=1e-12)
    assert max(values) == pytest.approx(values[20], abs=1e-12)  # theta = pi/4
    assert values[20] == pytest.approx(1.0, abs=1e-12)


def test_coherence_measure_bounded_with_nuclei():
    rng = np.random.default_rng(3)
    s = build_system((0.5, 1.0))
    for _ in range(20):
        p = coherence_measure(s, random_density(rng, s.dim, rank=2))
        assert 0.0 <= p <= 1.0


def test_coherence_measure_trace_floor():
    s = build_system()
    with pytest.raises(TraceFloorError):
        coherence_measure(s, 1e-14 * coherent_state(s))
    with pytest.raises(ValueError):
        coherence_measure(s, coherent_state(s), measure="nope")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.sampled_from([0.5, 2.0, 10.0]))
def test_coherence_measure_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    s = build_system((0.5,))
    rho = random_density(rng, s.dim, rank=int(rng.integers(1, s.dim + 1)))
    assert coherence_measure(s, c * rho) == pytest.approx(coherence_measure(s, rho), abs=1e-12)
