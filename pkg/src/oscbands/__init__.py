"""Semiclassical band spectra of perturbed harmonic oscillators.

Direct side: exact phase-space symbol calculus for the harmonic flow,
Hermite-basis diagonalization, eigenvalue-cluster detection, and band
invariants (classical integrals vs quantum trace moments).  Inverse side:
reconstruction of potentials from invariant data, with the unavoidable
ambiguities tracked explicitly.
"""

__version__ = "0.1.0"

from .phasepoly import ExpPolySymbol, PhasePolynomial
from .timesym import ExpTimePoly, TimeSymbol
from .averaging import (FourierComponentMap, Potential, SemiclassicalPotential,
                        a0_invert, average_numeric, average_poly, b_r_apply,
                        delta_average, gamma_asymptotic, gamma_coeff,
                        r_n_decompose)
from .symbolcalc import (flow_pullback, higher_bracket, moyal_power_expansion,
                         moyal_term, poisson_bracket, transport_symbols)
from .oscillator import (BasisSpec, Cluster, ClusterSet, SpectralData,
                         assemble_hamiltonian, cluster_width_scan,
                         compute_spectrum, detect_clusters, eigensolve,
                         quadratic_exact_spectrum)
from .invariants import (InvariantSeries, WeightSpec, band_invariant_first,
                         expansion_fit, gaussian_phase_integral, odd_invariant,
                         odd_kernel_integral, second_invariant,
                         semiclassical_invariant, sphere_invariant,
                         szego_compare, trace_moment_series, trace_moments)
from .inverse import (ClassicalOracle, QuantumSzegoOracle, RecoveryReport,
                      class_membership, gauge_moves, recover_analytic_2d,
                      recover_even_1d, recover_hessian, recover_linear_norm,
                      recover_odd_1d, recover_semiclassical_2d,
                      recover_separable, rigidity_svd)
