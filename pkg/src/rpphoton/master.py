"""Right-hand sides of the radical-pair master equations (k_T = 0).

Every generator returns an ``RhsBreakdown`` so the individual terms can be
inspected; ``generator`` returns a lean callable for time stepping.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .spin import SpinSystem, TraceFloorError, coherence_measure, COHERENCE_MEASURES, decompose

HERMITIAN_TOL = 1e-10


class Model(str, Enum):
    JONES_HORE = "jh"
    KOMINIS = "kominis"
    HABERKORN = "haberkorn"

    @classmethod
    def parse(cls, name: "str | Model") -> "Model":
        if isinstance(name, Model):
            return name
        aliases = {"jones-hore": "jh", "joneshore": "jh", "k": "kominis"}
        key = name.strip().lower()
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ModelSpec:
    """Master-equation choice and its rates.

    ``strict=False`` admits k_S = 0, which is only useful for checking the
    unitary part of the integrator in isolation.
    """

    kind: Model
    k_S: float
    k_sr: float = 0.0
    coherence_measure: str = "trace_norm"
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Model.parse(self.kind))
        if not np.isfinite(self.k_S) or self.k_S < 0 or (self.strict and self.k_S == 0):
            raise ValueError(f"k_S must be positive, got {self.k_S!r}")
        if not np.isfinite(self.k_sr) or self.k_sr < 0:
            raise ValueError(f"k_sr must be non-negative, got {self.k_sr!r}")
        if self.coherence_measure not in COHERENCE_MEASURES:
            raise ValueError(f"unknown coherence measure {self.coherence_measure!r}")


@dataclass(frozen=True, eq=False)
class RhsBreakdown:
    unitary: np.ndarray
    decoherence: np.ndarray
    reaction: np.ndarray
    relaxation: np.ndarray
    total: np.ndarray


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    asym = np.abs(H - H.conj().T).max() if H.size else 0.0
    if asym > tol:
        raise ValueError(f"Hamiltonian is not Hermitian (max asymmetry {asym:.3e})")


def _commutator_term(H, rho):
    return -1j * (H @ rho - rho @ H)


def _st_lindblad(system: SpinSystem, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (Q_S rho + rho Q_S - 2 Q_S rho Q_S, Q_S rho Q_S)."""
    QS = system.Q_S
    qs_rho = QS @ rho
    rho_qs = rho @ QS
    qrq = qs_rho @ QS
    return qs_rho + rho_qs - 2 * qrq, qrq


def relaxation_rhs(system: SpinSystem, rho: np.ndarray, k_sr: float) -> np.ndarray:
    """Spin relaxation as pure S/T dephasing, -2 k_sr rho_tilde.

    Equivalent to -k_sr(Q_S rho + rho Q_S - 2 Q_S rho Q_S) - k_sr(Q_T rho + rho Q_T
    - 2 Q_T rho Q_T); leaves traces and S/T populations untouched.
    """
    if k_sr < 0:
        raise ValueError(f"k_sr must be non-negative, got {k_sr!r}")
    if k_sr == 0:
        return np.zeros_like(rho, dtype=complex)
    return -2.0 * k_sr * decompose(system, rho).rho_tilde


def _finish(unitary, decoherence, reaction, relaxation) -> RhsBreakdown:
    return RhsBreakdown(
        unitary=unitary,
        decoherence=decoherence,
        reaction=reaction,
        relaxation=relaxation,
        total=unitary + decoherence + reaction + relaxation,
    )


def _expect_kind(spec: ModelSpec, kind: Model) -> None:
    if spec.kind is not kind:
        raise ValueError(f"model spec is {spec.kind.value!r}, expected {kind.value!r}")


def jones_hore_rhs(system: SpinSystem, H: np.ndarray, rho: np.ndarray, spec: ModelSpec) -> RhsBreakdown:
    """d rho/dt = -i[H, rho] - k_S (rho - Q_T rho Q_T), split as
    decoherence -k_S(Q_S rho + rho Q_S - 2 Q_S rho Q_S) plus reaction -k_S Q_S rho Q_S."""
    _expect_kind(spec, Model.JONES_HORE)
    check_hermitian(H)
    lind, qrq = _st_lindblad(system, rho)
    return _finish(
        _commutator_term(H, rho),
        -spec.k_S * lind,
        -spec.k_S * qrq,
        relaxation_rhs(system, rho, spec.k_sr),
    )


def kominis_rhs(
    system: SpinSystem,
    H: np.ndarray,
    rho: np.ndarray,
    spec: ModelSpec,
    trace_floor: float = 1e-12,
) -> RhsBreakdown:
    """Kominis master equation with p_coh recomputed from ``rho``.

    Raises TraceFloorError when Tr rho <= trace_floor.
    """
    _expect_kind(spec, Model.KOMINIS)
    check_hermitian(H)
    p = coherence_measure(system, rho, trace_floor=trace_floor, measure=spec.coherence_measure)
    lind, qrq = _st_lindblad(system, rho)
    tr = np.trace(rho).real
    singlet = np.trace(qrq).real
    reaction = -(1.0 - p) * spec.k_S * qrq - p * spec.k_S * singlet * rho / tr
    return _finish(
        _commutator_term(H, rho),
        -0.5 * spec.k_S * lind,
        reaction,
        relaxation_rhs(system, rho, spec.k_sr),
    )


def haberkorn_rhs(system: SpinSystem, H: np.ndarray, rho: np.ndarray, spec: ModelSpec) -> RhsBreakdown:
    """Traditional anticommutator form -(k_S/2){Q_S, rho}.

    Split the same way as the Kominis equation at p_coh = 0: decoherence
    -(k_S/2)(Q_S rho + rho Q_S - 2 Q_S rho Q_S), reaction -k_S Q_S rho Q_S.
    """
    _expect_kind(spec, Model.HABERKORN)
    check_hermitian(H)
    lind, qrq = _st_lindblad(system, rho)
    return _finish(
        _commutator_term(H, rho),
        -0.5 * spec.k_S * lind,
        -spec.k_S * qrq,
        relaxation_rhs(system, rho, spec.k_sr),
    )


def rhs(system: SpinSystem, H: np.ndarray, rho: np.ndarray, spec: ModelSpec, trace_floor: float = 1e-12) -> RhsBreakdown:
    if spec.kind is Model.JONES_HORE:
        return jones_hore_rhs(system, H, rho, spec)
    if spec.kind is Model.KOMINIS:
        return kominis_rhs(system, H, rho, spec, trace_floor=trace_floor)
    return haberkorn_rhs(system, H, rho, spec)


def generator(
    system: SpinSystem, H: np.ndarray, spec: ModelSpec, trace_floor: float = 1e-12
) -> Callable[[np.ndarray], np.ndarray]:
    """Return f(rho) -> d rho/dt for time stepping (H is validated once here)."""
    check_hermitian(H)
    H = np.array(H, dtype=complex)
    QS = system.Q_S
    k_S, k_sr = spec.k_S, spec.k_sr
    kind = spec.kind
    measure = spec.coherence_measure

    def f(rho: np.ndarray) -> np.ndarray:
        qs_rho = QS @ rho
        rho_qs = rho @ QS
        qrq = qs_rho @ QS
        out = -1j * (H @ rho - rho @ H)
        if kind is Model.JONES_HORE:
            out -= k_S * (qs_rho + rho_qs - qrq)
        elif kind is Model.HABERKORN:
            out -= 0.5 * k_S * (qs_rho + rho_qs)
        else:
            p = coherence_measure(system, rho, trace_floor=trace_floor, measure=measure)
            # Lindblad term at k_S/2 plus both reaction terms, collected
            out -= 0.5 * k_S * (qs_rho + rho_qs) - p * k_S * qrq
            out -= p * k_S * np.trace(qrq).real * rho / np.trace(rho).real
        if k_sr:
            out -= 2.0 * k_sr * (qs_rho - qrq + rho_qs - qrq)
        return out

    return f


def coherent_decay_check(
    system: SpinSystem,
    H: np.ndarray,
    rho: np.ndarray,
    spec: ModelSpec,
    trace_floor: float = 1e-12,
) -> tuple[float, np.ndarray]:
    """Predicted decay rate of rho_tilde and the measured non-unitary part of d rho_tilde/dt.

    The measured part should equal -(rate + 2 k_sr) * rho_tilde.
    """
    parts = decompose(system, rho)
    if not np.any(np.abs(parts.rho_tilde) > 0):
        raise ValueError("rho has no S-T coherence; decay rate is undefined")
    br = rhs(system, H, rho, spec, trace_floor=trace_floor)
    QS, QT = system.Q_S, system.Q_T
    total_tilde = QS @ br.total @ QT + QT @ br.total @ QS
    comm = H @ rho - rho @ H
    unitary_tilde = -1j * (QS @ comm @ QT + QT @ comm @ QS)
    measured = total_tilde - unitary_tilde

    if spec.kind is Model.JONES_HORE:
        rate = spec.k_S
    elif spec.kind is Model.HABERKORN:
        rate = 0.5 * spec.k_S
    else:
        p = coherence_measure(system, rho, trace_floor=trace_floor, measure=spec.coherence_measure)
        frac = np.trace(QS @ rho).real / np.trace(rho).real
        rate = spec.k_S * (0.5 + p * frac)
    return float(rate), measured
