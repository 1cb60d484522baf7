"""Design of penetrable obstacles with prescribed scattering in a 2D duct.

The package solves Helmholtz scattering problems in an acoustic waveguide
with sound-hard walls and constructs material perturbations that are
non-reflecting, perfectly invisible, or indistinguishable from a reference
obstacle, by a fixed-point continuation on a finite set of scattering-matrix
constraints.
"""

__version__ = "0.1.0"

from .constraints import Partition, constrained_feasibility, project_density
from .continuation import (ContinuationResult, GramBasis, continuation_run,
                           default_seed_field, fixed_point_step, gram_basis,
                           kernel_element)
from .fem import (AssembledSystem, Discretization, DiscreteField, DtnOperator,
                  WaveguideSolver, dtn_apply)
from .functionals import (FunctionalSpec, evaluate_functional, full_invisibility,
                          ontoness_diagnostic, reflection_only,
                          relative_generic, relative_real_t, relative_t_zero,
                          select_relative_functional, single_mode_energy,
                          single_mode_phase)
from .geometry import Disc, Ellipse, ObstacleRegion, Rectangle
from .materials import MaterialField, MaterialGrid
from .mesh import StripMesh, build_mesh
from .modes import (ModeBasis, WaveguideConfig, axial_wavenumber, mode_eval,
                    propagating_mode_count)
from .oracles import (sample_unitary_symmetric_2x2, slab_scattering_1d,
                      explicit_dR0)
from .scattering import (FieldBundle, scattering_differential,
                         scattering_matrix, verify_structure)
from .smatrix import ScatteringMatrix
