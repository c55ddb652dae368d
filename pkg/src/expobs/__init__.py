"""Observing expansive maps on tori and circles."""

from .collapse import CollapsingPair, collapse_family, collapse_offsets, sample_collapsing_pairs
from .embedding import observability_number_experiment, reconstruct, unbounded_steps_experiment
from .observable import (
    CharacterSum,
    CoordinateEmbedding,
    PwlCircle,
    PwlProfile,
    build_character_observable,
    compute_margins,
    delay,
    evaluate,
    min_separating_step,
    rho_weights,
    separation_floor,
)
from .report import VerificationReport
from .torus import (
    IntegerMatrix,
    SystemDescriptor,
    TorusPoint,
    apply,
    classify,
    kernel_elements,
    local_injectivity_probe,
    orbit,
    periodic_point_count,
    smith_normal_form,
)
from .verify import (
    EpsilonNet,
    expansivity_constant_estimate,
    genericity_probe,
    non_generic_demo,
    precision_to_expansivity,
    scalar_obstruction_witness,
    strict_precision_estimate,
)

__version__ = "0.1.0"
