"""Continuous-variable no-signaling behaviours: CFRD evaluation, PR boxes,
grid discretization, and finite-polytope decomposition."""
from .measures import (Behaviour, DiracAtom, GaussianAtom, Gaussian1D, Marginal1D, Measure,
                       MeasureError, PointMass, canonicalize, is_no_signaling, marginal, mass,
                       mix, mix_behaviours, sample)
from .moments import (CfrdReport, cfrd, cross_moment, cross_moment_mc, gaussian_prbox2_violation,
                      gaussian_raw_moment)
from .boxes import (HVTerm, PRBoxSpec, appendix_c_sequence, cv_pr_box, cv_pr_box_general,
                    deterministic_box, gaussian_pr_box, local_hv_behaviour, relabel_inputs,
                    relabel_outputs)
from .discretization import (DomainError, FiniteBehaviour, Grid, bin_behaviour, chsh,
                             convergence_report, discretize_compact, discretize_unbounded,
                             from_finite, to_finite)
from .polytope import (CatalogSizeError, Decomposition, DecompositionError, VertexCatalog,
                       decompose, enumerate_vertices, is_extreme, is_no_signaling_finite)

__version__ = "0.1.0"
