"""scatterid: wave scattering simulation, scattering-coefficient extraction,
and dictionary-based identification of 2D piecewise-constant targets.

Modules:
    specfun       Bessel/Hankel functions and cylindrical waves
    geometry      boundary curves, the target catalog, rigid motions
    bie           boundary-integral transmission solver
    coefficients  scattering matrices and their exact transforms
    farfield      far-field patterns and distribution descriptors
    acquisition   multistatic simulation, noise, least-squares inversion
    identify      descriptor dictionary, matching cost, experiments
    cli           command-line interface
"""

from .acquisition import (AcquisitionGeometry, MSRMatrix, add_noise,
                          msr_simulate, reconstruct_w)
from .coefficients import (ScatteringMatrix, decay_profile, rotate_w,
                           scale_check, scattering_matrix, translate_w)
from .farfield import DescriptorGrid, FarFieldGrid, descriptor, far_field, \
    invariance_gap
from .geometry import (Circle, DiscretizedBoundary, Ellipse, Inclusion,
                       Material, RigidMotion, RoundedPolygon, Shape,
                       TargetConfig, apply_motion, catalog, discretize)
# the identify *function* stays namespaced under the identify submodule so
# the submodule itself remains importable as scatterid.identify
from .identify import (Dictionary, ExperimentPlan, FrequencyGrid,
                       MatchReport, ScaleGrid, build_dictionary, cost_j,
                       epsilon, load_dictionary, run_experiment)
from . import identify  # noqa: F401  (rebind the submodule attribute)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionGeometry", "MSRMatrix", "add_noise", "msr_simulate",
    "reconstruct_w", "ScatteringMatrix", "decay_profile", "rotate_w",
    "scale_check", "scattering_matrix", "translate_w", "DescriptorGrid",
    "FarFieldGrid", "descriptor", "far_field", "invariance_gap", "Circle",
    "DiscretizedBoundary", "Ellipse", "Inclusion", "Material", "RigidMotion",
    "RoundedPolygon", "Shape", "TargetConfig", "apply_motion", "catalog",
    "discretize", "Dictionary", "ExperimentPlan", "FrequencyGrid",
    "MatchReport", "ScaleGrid", "build_dictionary", "cost_j", "epsilon",
    "load_dictionary", "run_experiment",
]
