"""Local BRST cohomology and Lagrange structures of AKSZ sigma models.

Exact rational computations on jets of superfield components: graded
polynomials, target Q-manifolds, BRST differentials, descent, block-wise
cohomology and functional multivectors.
"""

from .errors import (AKSZError, GradingError, NotACocycleError, NotNilpotentError, SpecError,
                     TruncationError)
from .graded import (Derivation, GradedVariable, Kind, Monomial, Polynomial, apply_derivation,
                     graded_commutator, koszul_sort, multiply, substitute)
from .qtarget import (BracketSpec, QManifoldSpec, check_master_equation, check_nilpotent,
                      cotangent_lift, hamiltonian_vf, lie_algebra_target, q_derivation)
from .cohomology import (BlockSelector, CohomologyReport, cohomology_block, cohomology_blocks,
                         exactness_witness)
from .jets import (JetContext, LocalFunctional, build_jet_context, build_master_action,
                   descent_ladder, euler_lagrange, functional_equal, prolong, pullback_I)
from .multivectors import (LagrangeStructureCandidate, apply_equivalence,
                           check_lagrange_structure, extend_jet_context,
                           functional_field_bracket, pullback_I_E, s_E)
from .specfile import SpecDocument, bundled_specs, parse_spec

__version__ = "0.1.0"
