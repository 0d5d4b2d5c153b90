"""planar_trap: design and analysis of single-plane RF ion traps.

Pipeline: electrode layout -> electrostatic basis solution (boundary
elements or the analytic gapless-plane model) -> RF pseudopotential and
trap characterization -> micromotion compensation -> ion-chain crystals
and normal modes.  See README.md for the coordinate conventions and the
CLI.
"""

from .bem import BasisSolution, evaluate_basis, solve_basis
from .compensation import (CompensationResult, ConstraintSpec, axial_curvature_for,
                           build_constraint_system, residual_diagnostics,
                           solve_voltages)
from .crystal import (HarmonicPotential, IonChain, NormalModes, SampledPotential,
                      crystal_length, equilibrium_positions, length_scale,
                      mode_spectrum_scan, normal_modes)
from .geometry import (Electrode, Polygon, ReferenceLayoutParams, Role, TrapLayout,
                       build_reference_layout, load_layout, point_in_electrode,
                       save_layout, validate_layout)
from .mesh import PanelMesh, mesh_layout
from .pseudopotential import (DriveParams, EffectivePotential, IonSpecies,
                              QuadrupoleField, TrapReport, VoltageSet, axial_scan,
                              characterize_trap, find_rf_null, laser_overlap_check,
                              paper_voltages, pseudo_at, total_at)
from .rectfield import FieldSample, GaplessLayoutField, analytic_rect_basis

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
