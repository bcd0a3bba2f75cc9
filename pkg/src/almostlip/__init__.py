"""Covering-number fits, multi-scale embeddings and probe maps for finite point clouds."""

from .covering import (
    box_counting_estimate,
    check_dbaa,
    cover_counts,
    default_eps_range,
    covering_number_at_origin,
    dyadic_grid,
    exact_cover_number,
    fit_envelope,
    fit_homogeneity,
    greedy_cover,
)
from .embedding import build_embedding, verify_image_invariance, verify_lower_bound
from .errors import AlmostLipError
from .functionals import build_scale_frame, norming_functional, stack_frames
from .generators import GeneratorSpec, corpus, generate
from .kernels import BACKEND
from .metric import (
    DifferenceSet,
    FiniteMetricSpace,
    PointCloud,
    difference_set,
    enclosing_radius,
    kuratowski_embed,
)
from .prevalence import (
    ExperimentConfig,
    check_summability,
    estimate_qn,
    prevalence_sweep,
    two_regime_check,
    verify_holder,
    verify_wem,
)
from .probe import SubspaceSequence, sample_probe, sample_unit_ball, verify_lemma_1_6
from .slog import certify_slog_bounds, loglog_fit, slog

__version__ = "0.1.0"
