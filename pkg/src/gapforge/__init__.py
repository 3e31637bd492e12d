"""Spectral-gap certification for periodic graph Laplacians whose symmetry
group is a finitely generated type-I group (abelian lattice part extended by
a finite group).

The pipeline: build a weighted-graph fundamental domain with paired ports
(`domain`), sample the dual space into irreducible representation fibers
(`repspace`), assemble and diagonalize Dirichlet / Neumann / fiber-twisted
forms (`spectral`), verify the transform identities and collect bands
(`floquet`), and certify gaps from the bracketing intervals (`gaps`).
"""

from .domain import (CoverPatch, DiscretizedDomain, build_cover_patch, build_domain,
                     domain_from_json, domain_to_json, translate, validate_domain)
from .errors import (ConfigError, ConvergenceError, GapforgeError, PreconditionError,
                     StructuralError, UnsupportedGroupError)
from .floquet import (BandCollection, CoverFunction, FiberFunction, build_bands,
                      energy_identity_check, floquet_transform, intertwine_check,
                      parseval_check, random_cover_function)
from .gaps import (BracketIntervals, DomainParams, Gap, GapReport, SweepResult, bracket,
                   detect_gaps, nonempty_band_witness, sweep_epsilon,
                   union_inclusion_check)
from .groups import (GroupElement, GroupSpec, builtin_group, compose, group_from_config,
                     identity, inverse, validate_group_spec, word_ball)
from .repspace import (DualGrid, RepFiber, character_fiber, commutant_dimension,
                       fiber_matrix, induce, irreps_finite, little_group,
                       plancherel_check, sample_dual, stabilizer_irreps, trivial_fiber,
                       validate_fiber)
from .spectral import (AssembledOperator, BoundaryCondition, Spectrum, assemble,
                       dirichlet, eigen_solve, equivariant, interlace_check, neumann,
                       rayleigh)

__version__ = "0.1.0"
