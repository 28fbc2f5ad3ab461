"""Attributed scattering centers, their components and multi-layer
tri-factorization of feature matrices."""

from .clustering import (AsccPartition, GeometricType, geometric_classify, kmeans,
                         kmeans_cluster, reconstruct_components, table_cluster)
from .errors import ConstraintInfeasibleError, InputError, NumericalError, UnclassifiableError
from .extraction import DictionarySpec, ExtractionResult, build_dictionary, omp_extract
from .factorization import (NonNegMatrix, SolverConfig, TriFactorLayer, make_nonneg,
                            nmf_factorize, onmtf_first_layer)
from .losses import (FeatureStack, LocalWeightState, cosine_sim, derive_approx_components,
                     global_discrimination_loss, local_pixel_loss, local_weight)
from .metrics import (LinearReadout, MetricReport, SsimConfig, attribute_weights,
                      fit_linear_readout, ms_ssim, mse, ssim)
from .mlo import (ComponentMatrix, MloDecomposition, constrained_chain, decomposition_error,
                  mlo_decompose, onmtf_constrained_layer, prepare_component)
from .pipeline import PipelineConfig, RunReport, run_pipeline
from .scattering import (AscParameterSet, PhaseHistory, RadarGrid, SarImage,
                         evaluate_asc_response, form_image, synthesize_scene)

__version__ = "0.1.0"
