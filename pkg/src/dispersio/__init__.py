"""Dispersive stabilization of first-order systems.

Tools for systems d/dt u + i A(dx) u + B(u, dx) u = f whose first-order
part alone is exponentially ill posed, but where a nonscalar dispersion A
restores L2 well-posedness.  The package checks the structural condition
(skew coupling blocks divisible by spectral gaps), builds the degree -1
conjugator and the associated paradifferential symmetrizer, scans exact
propagator norms over frequency, and integrates the mollified equations
linearly or by Picard iteration.
"""

from .symbols import (QuadraticSymbol, FirstOrderSymbol, MonomialTerm,
                      SystemSpec, EigenStructure, CheckReport,
                      StructuralError, DegenerateGapError,
                      OriginFrequencyError, eigenstructure, track_branches,
                      conjugator, conjugation_remainder, herm_defect,
                      check_coupling_divisibility,
                      check_conjugate_divisibility, double_system,
                      doubled_state, wirtinger_partials, linearized_coupling,
                      zero_first_order, TAU_CLUSTER, TAU_ALG, TAU_DIV)
from .grid import (GridField, mode_field, random_field, l2_norm, inner,
                   sobolev_norm, linf_norm, w1inf_norm, wavenumber_axes,
                   abs_xi_grid)
from .specio import (SpecFormatError, OdePair, load_system, dump_system,
                     system_document, parse_document, bundled_names,
                     load_bundled, resolve)
from .stability import (ScanRecord, StabilityReport, OdeSumReport,
                        generator, amplification, amplification_matrix,
                        sample_frequencies, stability_scan,
                        ode_sum_stability)
from .paradiff import (CutoffSpec, DyadicScheme, PdoSymbol, scheme_for,
                       paraproduct_symbol, matrix_symbol, multiplier_symbol,
                       first_order_symbol, symbol_product, symbol_adjoint,
                       apply_T, apply_T_adjoint, compose_defect,
                       adjoint_defect, cutoff_difference,
                       paralinearization_defect, paralinearization_constant,
                       time_commutator, measure_admissibility,
                       paracheck_report)
from .evolution import (CflError, LinearPropagator, Symmetrizer,
                        EnergyTrace, SolveResult, PicardResult,
                        conjugator_symbol, build_symmetrizer, solve_linear,
                        picard_solve, nonlinear_residual,
                        mollifier_consistency, coefficient_diagnostics,
                        initial_field, zeta_profile, mollifier,
                        fitted_growth_constant, tail_growth_rate,
                        skew_part_field, state_interpolant)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
