"""Krylov reduced-order models for complex-stretched wave operators.

The pipeline: discretize a wave operator with absorbing layers
(:mod:`wavemor.grid`, :mod:`wavemor.medium`, :mod:`wavemor.operators`),
build a polynomial or extended Krylov basis in the operator's unconjugated
bilinear form (:mod:`wavemor.krylov`), correct the projected dynamics onto
the stable branch and evaluate traces in either domain
(:mod:`wavemor.rom`). Independent reference solvers live in
:mod:`wavemor.oracles`; scenario files and the experiment harness in
:mod:`wavemor.scenario` and :mod:`wavemor.harness`.
"""

from .bases import ExtendedBasis, PolynomialBasis, eks_column_indices
from .errors import (AccuracyWarning, BranchChoiceWarning, BranchCutError,
                     BreakdownError, ConfigurationError, DefectiveMatrixError,
                     NearSingularWarning, SingularModelError,
                     SingularOperatorError, UsageError, WavemorError)
from .grid import (GridSpec, StretchingProfile, build_grid, build_stretching,
                   default_pml_strength)
from .harness import RunReport, emit_report, run_convergence, run_timedomain
from .krylov import (check_decomposition, eks_orthogonalize, load_basis,
                     pks_lanczos, prefix_basis, save_basis)
from .linalg import (EigenSystem, FactorizedOperator, ModalSystem, bilinear,
                     factorize, principal_sqrt)
from .medium import (MEDIUM_PRESETS, MediumModel, homogeneous_medium,
                     layered_medium, medium_from_preset, rod_lattice_medium)
from .operators import (StretchedOperator, assemble_operator, assemble_source,
                        symmetry_defect)
from .oracles import (DenseOracle, bromwich_contour, brute_force_eks_basis,
                      courant_limit, dense_freq_solution, dense_time_solution,
                      direct_freq_solve, laplace_inversion_check,
                      leapfrog_reference)
from .response import (ResponseSet, convolve_response, gaussian_wavelet,
                       uniform_step)
from .rom import (ConvergenceTable, ReducedModel, build_reduced_model,
                  eval_freq, eval_time, rom_error_curve)
from .scenario import (Scenario, assemble_scenario, load_scenario,
                       scenario_from_dict, template, template_scenario)

__version__ = "0.1.0"
