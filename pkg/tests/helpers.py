import numpy as np


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def projector(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def coherent_state(system):
    """(|S><S| + |T0><T0| + |S><T0| + |T0><S|)/2."""
    psi = (system.electron_state("S") + system.electron_state("T0")) / np.sqrt(2)
    return projector(psi)
