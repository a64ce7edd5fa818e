"""Spin Hilbert space for a radical pair: operators, projectors, S/T decomposition.

Basis ordering is electron1 (x) electron2 (x) nucleus1 (x) nucleus2 ...; within
each spin the basis runs from m = +S down to m = -S.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_MAX_DIM = 4096

_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2


class SpinSpecError(ValueError):
    pass


def spin_matrices(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Sx, Sy, Sz) for a single spin of quantum number ``spin``."""
    d = int(round(2 * spin)) + 1
    m = spin - np.arange(d)
    sp = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        sp[i - 1, i] = np.sqrt(spin * (spin + 1) - m[i] * (m[i] + 1))
    sm = sp.conj().T
    return (sp + sm) / 2, (sp - sm) / 2j, np.diag(m).astype(complex)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpinSpec:
    """Nuclear spins coupled to the electron pair (empty means electrons only)."""

    nuclei: tuple[float, ...] = ()

    def __post_init__(self):
        nuclei = tuple(float(I) for I in self.nuclei)
        for I in nuclei:
            if not np.isfinite(I) or I < 0 or abs(2 * I - round(2 * I)) > 1e-12:
                raise SpinSpecError(f"nuclear spin {I!r} is not a non-negative half-integer")
        object.__setattr__(self, "nuclei", nuclei)

    @property
    def dims(self) -> tuple[int, ...]:
        return (2, 2) + tuple(int(round(2 * I)) + 1 for I in self.nuclei)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


@dataclass(frozen=True, eq=False)
class SpinSystem:
    spec: SpinSpec
    dim: int
    s1: np.ndarray  # (3, dim, dim)
    s2: np.ndarray
    nuclear: tuple[np.ndarray, ...] = field(repr=False)
    Q_S: np.ndarray = field(repr=False)
    Q_T: np.ndarray = field(repr=False)

    @property
    def n_nuclei(self) -> int:
        return len(self.nuclear)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def electron_state(self, label: str) -> np.ndarray:
        """Two-electron state vector ('S', 'T0', 'T+', 'T-'); electrons-only systems."""
        if self.dim != 4:
            raise ValueError("electron_state needs a system without nuclei")
        r2 = np.sqrt(0.5)
        states = {
            "S": [0, r2, -r2, 0],
            "T0": [0, r2, r2, 0],
            "T+": [1, 0, 0, 0],
            "T-": [0, 0, 0, 1],
        }
        return np.array(states[label], dtype=complex)

    def singlet_density(self) -> np.ndarray:
        """Unit-trace singlet electrons with unpolarized nuclei."""
        return self.Q_S / np.trace(self.Q_S).real


def _embed(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == site else np.eye(d, dtype=complex))
    return out


def build_system(spec: SpinSpec | Sequence[float] = (), max_dim: int = DEFAULT_MAX_DIM) -> SpinSystem:
    if not isinstance(spec, SpinSpec):
        spec = SpinSpec(tuple(spec))
    dims = spec.dims
    dim = spec.dim
    if dim > max_dim:
        raise SpinSpecError(f"Hilbert dimension {dim} exceeds cap {max_dim}")

    s1 = np.stack([_embed(o, 0, dims) for o in (_SX, _SY, _SZ)])
    s2 = np.stack([_embed(o, 1, dims) for o in (_SX, _SY, _SZ)])
    nuclear = []
    for j, I in enumerate(spec.nuclei):
        ops = spin_matrices(I)
        nuclear.append(_readonly(np.stack([_embed(o, 2 + j, dims) for o in ops])))

    s1_dot_s2 = np.einsum("aij,ajk->ik", s1, s2)
    Q_S = 0.25 * np.eye(dim) - s1_dot_s2
    Q_T = np.eye(dim) - Q_S
    return SpinSystem(
        spec=spec,
        dim=dim,
        s1=_readonly(s1),
        s2=_readonly(s2),
        nuclear=tuple(nuclear),
        Q_S=_readonly(Q_S),
        Q_T=_readonly(Q_T),
    )


def zeeman_hamiltonian(system: SpinSystem, omega1: float, omega2: float) -> np.ndarray:
    """H = omega1*s1z + omega2*s2z (angular frequencies, hbar = 1)."""
    return omega1 * system.s1[2] + omega2 * system.s2[2]


def hyperfine_hamiltonian(
    system: SpinSystem, couplings: Sequence[tuple[int, int, float]]
) -> np.ndarray:
    """Isotropic hyperfine term sum A * s_e . I_n.

    ``couplings`` holds (electron index 0|1, nucleus index, A) triples.
    """
    H = np.zeros((system.dim, system.dim), dtype=complex)
    for electron, nucleus, A in couplings:
        if electron not in (0, 1):
            raise IndexError(f"electron index {electron} out of range (0 or 1)")
        if not 0 <= nucleus < system.n_nuclei:
            raise IndexError(f"nucleus index {nucleus} out of range for {system.n_nuclei} nuclei")
        s = system.s1 if electron == 0 else system.s2
        H += A * np.einsum("aij,ajk->ik", s, system.nuclear[nucleus])
    return H


@dataclass(frozen=True, eq=False)
class CoherenceParts:
    rho_bar: np.ndarray
    rho_tilde: np.ndarray


def _check_shape(system: SpinSystem, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (system.dim, system.dim):
        raise ValueError(f"matrix shape {rho.shape} does not match system dimension {system.dim}")
    return rho


def decompose(system: SpinSystem, rho: np.ndarray) -> CoherenceParts:
    """Split rho into its S/T-incoherent part and its S-T coherences."""
    rho = _check_shape(system, rho)
    QS, QT = system.Q_S, system.Q_T
    st = QS @ rho @ QT
    ts = QT @ rho @ QS
    rho_tilde = st + ts
    return CoherenceParts(rho_bar=rho - rho_tilde, rho_tilde=rho_tilde)


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values; Hermitian inputs go through eigvalsh."""
    if np.allclose(a, a.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(a).max())):
        return float(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2)).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


class TraceFloorError(ArithmeticError):
    """Raised when the surviving population has fallen below the trace floor."""


def coherence_trace_norm(system: SpinSystem, rho: np.ndarray) -> float:
    """Default S-T coherence measure.

    p = ||rho_tilde||_tr / (2 sqrt(Tr{Q_S rho} Tr{Q_T rho})), clamped to [0, 1].

    This is 0 for any S/T-incoherent state and 1 for a pure state with both a
    singlet and a triplet component. Positivity bounds each S-T coherence by the
    geometric mean of the populations, so for a valid density matrix the ratio
    never exceeds 1 before clamping.
    """
    parts = decompose(system, rho)
    norm = trace_norm(parts.rho_tilde)
    ps = np.trace(system.Q_S @ rho).real
    pt = np.trace(system.Q_T @ rho).real
    scale = abs(np.trace(rho).real)
    if norm <= 1e-15 * scale:
        return 0.0
    denom = 2.0 * np.sqrt(max(ps, 0.0) * max(pt, 0.0))
    if denom <= 0.0:
        return 1.0
    return float(min(max(norm / denom, 0.0), 1.0))


COHERENCE_MEASURES = {"trace_norm": coherence_trace_norm}


def coherence_measure(
    system: SpinSystem,
    rho: np.ndarray,
    trace_floor: float = 1e-12,
    measure: str = "trace_norm",
) -> float:
    """p_coh of ``rho`` using a named measure from ``COHERENCE_MEASURES``.

    Raises TraceFloorError when Tr rho <= trace_floor.
    """
    rho = _check_shape(system, rho)
    tr = np.trace(rho).real
    if tr <= trace_floor:
        raise TraceFloorError(f"Tr rho = {tr:.3e} is at or below the floor {trace_floor:.3e}")
    try:
        fn = COHERENCE_MEASURES[measure]
    except KeyError:
        raise ValueError(f"unknown coherence measure {measure!r}") from None
    return fn(system, rho)
