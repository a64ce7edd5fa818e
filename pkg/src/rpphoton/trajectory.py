"""Fixed-step RK4 integration of a master equation and photon-count binning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .master import ModelSpec, generator
from .spin import SpinSystem, TraceFloorError, coherence_measure, decompose, trace_norm

TRACE_FLOOR_REL = 1e-12
POSITIVITY_HALT = 1e-6
STEP_ERROR_TOL = 1e-6


class StepSizeError(ArithmeticError):
    """The half-step error estimate says the step is too coarse."""


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t_end: float
    h: float

    def __post_init__(self):
        span = self.t_end - self.t0
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"step must be positive, got {self.h!r}")
        if span < self.h * (1 - 1e-9):
            raise ValueError(f"step {self.h} exceeds the grid span {span}")

    @classmethod
    def in_units(cls, t0: float, t_end: float, h: float, k_S: float) -> "TimeGrid":
        """Build a grid from times given in units of 1/k_S."""
        return cls(t0 / k_S, t_end / k_S, h / k_S)

    @property
    def n_steps(self) -> int:
        ratio = (self.t_end - self.t0) / self.h
        return max(1, math.ceil(ratio - 1e-9))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)


def default_step(k_S: float, omega1: float, omega2: float, delta_t: float | None = None) -> float:
    """min(1/(200 k_S), T_osc/50), shrunk so that it divides ``delta_t`` exactly."""
    h = 1.0 / (200.0 * k_S)
    dw = abs(omega1 - omega2)
    if dw > 0:
        h = min(h, 2 * np.pi / dw / 50.0)
    if delta_t is not None:
        h = delta_t / math.ceil(delta_t / h - 1e-9)
    return h


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    qs_expect: np.ndarray
    trace: np.ndarray
    p_coh: np.ndarray
    tilde_norm: np.ndarray
    model: ModelSpec
    h: float
    min_eigenvalue: float = 0.0
    halted: str | None = None
    final_rho: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.times)


def validate_density(rho: np.ndarray, dim: int) -> None:
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dimension {dim}")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -1e-9:
        raise ValueError("density matrix is not positive semidefinite")
    if np.trace(rho).real <= 0:
        raise ValueError("density matrix has non-positive trace")


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_error(f, y, h) -> float:
    """Relative error of one full step, estimated against two half steps."""
    full = rk4_step(f, y, h)
    half = rk4_step(f, rk4_step(f, y, h / 2), h / 2)
    scale = max(np.abs(half).max(), 1e-300)
    return float(np.abs(full - half).max() * 16.0 / 15.0 / scale)


def integrate(
    system: SpinSystem,
    H: np.ndarray,
    rho0: np.ndarray,
    spec: ModelSpec,
    grid: TimeGrid,
    check_every: int = 25,
    step_tol: float = STEP_ERROR_TOL,
) -> Trajectory:
    """Integrate from ``rho0`` over ``grid`` with classical RK4, recording observables at every step.

    Halts early (``halted`` set) when Tr rho falls below 1e-12 * Tr rho0 or the
    smallest eigenvalue drops below -1e-6 * Tr rho0. Raises StepSizeError when the
    half-step error estimate, taken every ``check_every`` steps, exceeds ``step_tol``.
    """
    rho = np.array(rho0, dtype=complex)
    validate_density(rho, system.dim)
    tr0 = np.trace(rho).real
    floor = TRACE_FLOOR_REL * tr0
    f = generator(system, H, spec, trace_floor=floor)
    QS = system.Q_S
    h = grid.h

    times, qs, trace, pcoh, tnorm = [], [], [], [], []
    min_eig = np.inf
    halted = None

    def record(t, r) -> bool:
        nonlocal min_eig, halted
        tr = np.trace(r).real
        if tr <= floor:
            halted = "trace_floor"
            return False
        lam = np.linalg.eigvalsh((r + r.conj().T) / 2).min()
        min_eig = min(min_eig, lam)
        times.append(t)
        qs.append(np.trace(QS @ r).real / tr0)
        trace.append(tr)
        pcoh.append(coherence_measure(system, r, trace_floor=floor, measure=spec.coherence_measure))
        tnorm.append(trace_norm(decompose(system, r).rho_tilde))
        if lam < -POSITIVITY_HALT * tr0:
            halted = "positivity"
            return False
        return True

    grid_times = grid.times
    ok = record(grid_times[0], rho)
    for i in range(1, len(grid_times)):
        if not ok:
            break
        try:
            if check_every and (i - 1) % check_every == 0:
                err = _step_error(f, rho, h)
                if err > step_tol:
                    raise StepSizeError(
                        f"step h={h:.4g} too large at t={grid_times[i - 1]:.4g}: "
                        f"relative error estimate {err:.2e} > {step_tol:.0e}"
                    )
            rho = rk4_step(f, rho, h)
        except TraceFloorError:
            halted = "trace_floor"
            break
        ok = record(grid_times[i], rho)

    return Trajectory(
        times=np.array(times),
        qs_expect=np.array(qs),
        trace=np.array(trace),
        p_coh=np.array(pcoh),
        tilde_norm=np.array(tnorm),
        model=spec,
        h=h,
        min_eigenvalue=float(min_eig) if np.isfinite(min_eig) else 0.0,
        halted=halted,
        final_rho=rho,
    )


@dataclass(eq=False)
class BinnedExpectation:
    """Expected photon counts per bin; ``edges`` has one more entry than ``N``."""

    edges: np.ndarray
    N: np.ndarray

    @property
    def starts(self) -> np.ndarray:
        return self.edges[:-1]

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0]) if len(self.edges) > 1 else float("nan")

    def __len__(self) -> int:
        return len(self.N)


def bin_counts(traj: Trajectory, delta_t: float, N0: float) -> BinnedExpectation:
    """Expected counts N0 * int k_S <Q_S> dt over consecutive bins of width ``delta_t``.

    Uses the trapezoidal rule on the recorded grid; only complete bins are returned.
    """
    if not N0 > 0:
        raise ValueError(f"ensemble size must be positive, got {N0!r}")
    h = traj.h
    ratio = delta_t / h
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"bin width {delta_t} is not an integer multiple of the step {h}")
    n_bins = (len(traj.times) - 1) // m
    k_S = traj.model.k_S
    rate = k_S * traj.qs_expect
    N = np.empty(n_bins)
    for k in range(n_bins):
        seg = rate[k * m : (k + 1) * m + 1]
        N[k] = N0 * np.trapezoid(seg, dx=h)
    edges = traj.times[0] + delta_t * np.arange(n_bins + 1) if n_bins else np.array([traj.times[0]])
    return BinnedExpectation(edges=edges, N=np.clip(N, 0.0, None))


@dataclass(eq=False)
class DeltaN:
    """Normalized successive-bin differences in both sign conventions.

    ``text`` is (N_{k+1} - N_k)/N_k, ``fig`` is its negative. Entries whose
    normalizing bin is empty are NaN.
    """

    t: np.ndarray
    text: np.ndarray
    fig: np.ndarray


def ratio_differences(values: np.ndarray, norm: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    norm = np.asarray(norm, dtype=float)
    out = np.full(len(values) - 1, np.nan)
    ok = norm[:-1] > 0
    out[ok] = (values[1:][ok] - values[:-1][ok]) / norm[:-1][ok]
    return out


def delta_n_expected(bins: BinnedExpectation) -> DeltaN:
    if len(bins) < 2:
        raise ValueError("need at least two bins to form delta n")
    text = ratio_differences(bins.N, bins.N)
    return DeltaN(t=bins.starts[:-1].copy(), text=text, fig=-text)
