"""Radical-pair master equations and the photon-statistics test that separates them."""

__version__ = "0.1.0"

from .spin import (  # noqa: E402
    SpinSpec,
    SpinSystem,
    build_system,
    coherence_measure,
    decompose,
    hyperfine_hamiltonian,
    zeeman_hamiltonian,
)
from .master import (  # noqa: E402
    Model,
    ModelSpec,
    coherent_decay_check,
    haberkorn_rhs,
    jones_hore_rhs,
    kominis_rhs,
    relaxation_rhs,
)
from .trajectory import TimeGrid, bin_counts, delta_n_expected, integrate  # noqa: E402
from .photon import (  # noqa: E402
    CountSeries,
    SkellamParams,
    delta_n_sampled,
    monte_carlo_counts,
    poisson_sample,
    sigma_delta_n,
    skellam_pmf,
)
