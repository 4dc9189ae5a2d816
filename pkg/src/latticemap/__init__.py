"""Chain mappings of structured bosonic reservoirs and the dynamics of atoms coupled to them."""

__version__ = "0.1.0"

from .correlation import CorrelationKernel, dissipation_rate, independent_env_check, sample_kernel
from .dispersion import (
    CosineBand, EffectiveMass, PowerLaw, SpectralDensity, Tabulated, density_of_states, evaluate,
    group_velocity, spectral_to_dispersion,
)
from .dynamics import (
    SectorBasis, SectorState, Trajectory, build_hamiltonian_direct_k, build_hamiltonian_mapped, evolve,
    steady_histogram, total_population_average, volterra_oracle,
)
from .mapping import ChainCoupling, MappedSystem, attach_atoms, build_f_matrix, build_separable_f, verify_unitary
from .master_eq import AtomicSystem, integrate_me, me_coefficients, negativity_diagnostic
from .polariton import (
    PolaritonReport, detect_bound_states, diagonalize_single_exc, gap_boundary_predictor, polariton_population,
    polariton_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
