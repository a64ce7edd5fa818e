"""log I_nu(x) for integer order without overflow or underflow.

Orders below ``DEBYE_MIN_ORDER`` use scipy's exponentially scaled ``ive``,
which cannot underflow there because nu**2 / (2x) stays small. Larger orders
use the uniform (Debye) asymptotic expansion summed in log space, which is
accurate to double precision for nu >= 30 whatever the argument.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import ive

DEBYE_MIN_ORDER = 30
DEBYE_TERMS = 12


@lru_cache(maxsize=None)
def debye_polynomials(n_terms: int = DEBYE_TERMS) -> tuple[Polynomial, ...]:
    """u_0 .. u_{n-1} from u_{k+1} = t^2(1-t^2)/2 u_k' + 1/8 int_0^t (1-5s^2) u_k ds."""
    t = Polynomial([0, 1])
    polys = [Polynomial([1.0])]
    for _ in range(n_terms - 1):
        u = polys[-1]
        nxt = 0.5 * t**2 * (1 - t**2) * u.deriv() + 0.125 * ((1 - 5 * t**2) * u).integ(lbnd=0)
        polys.append(nxt)
    return tuple(polys)


def debye_log_series(nu: np.ndarray, t: np.ndarray) -> np.ndarray:
    """log sum_k u_k(t) / nu**k, with t = nu / sqrt(nu**2 + x**2)."""
    series = np.zeros(np.shape(nu))
    inv_nu_k = np.ones(np.shape(nu))
    for u in debye_polynomials():
        series += u(t) * inv_nu_k
        inv_nu_k = inv_nu_k / nu
    return np.log(series)


def _log_iv_debye(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    r = np.hypot(nu, x)
    # nu * eta = r + nu * log(x / (nu + r))
    return (
        r
        + nu * (np.log(x) - np.log(nu + r))
        - 0.5 * np.log(2 * np.pi * r)
        + debye_log_series(nu, nu / r)
    )


def log_iv(nu, x) -> np.ndarray:
    """log of the modified Bessel function I_nu(x) for integer nu >= 0, x >= 0.

    Returns -inf where I_nu(x) = 0 (x = 0, nu > 0).
    """
    nu, x = np.broadcast_arrays(np.abs(np.asarray(nu, dtype=float)), np.asarray(x, dtype=float))
    out = np.empty(nu.shape)
    zero = x == 0
    out[zero] = np.where(nu[zero] == 0, 0.0, -np.inf)
    small = ~zero & (nu < DEBYE_MIN_ORDER)
    with np.errstate(divide="ignore"):
        out[small] = np.log(ive(nu[small], x[small])) + x[small]
    big = ~zero & ~small
    out[big] = _log_iv_debye(nu[big], x[big])
    return out[()] if out.ndim == 0 else out
