"""Metaplectic operators on grids, Gaussian oracles, and the uncertainty and
decay inequalities attached to the B block of a symplectic matrix."""
from .symplectic import (MetaplecticConstants, NoUncertaintyError, SingularityError,
                         SubspaceFrame, SymplecticError, SymplecticMatrix, build_frame,
                         check_lemma_isomorphisms, constants, q_volume, standard_form,
                         symplectic_inverse, validate_symplectic)
from .operators import (chirp, fourier, free_particle, from_config, harmonic_oscillator,
                        multiplier, partial_fourier, rescale)
from .grid import GridFunction, GridSpec, l2_norm, read_mgf1, sample, write_mgf1
from .gaussian import (GaussianState, PolyGaussian, build_extremizer_directional,
                       extremizer_state, gamma_for_sharpness, transform_gaussian,
                       transform_poly_gaussian)
from .transform import apply, make_plan, phase_align, transform_grid
from .uncertainty import (UncertaintyReport, bound_sweep, heisenberg_cartesian,
                          heisenberg_directional, heisenberg_full)
from .decay import (GrowthProbe, MorganParams, beurling_integral, beurling_probe,
                    construct_morgan_admissible, morgan_condition_probe, morgan_dual_probe,
                    morgan_threshold, probe_growth)

__version__ = "0.1.0"
