"""Contextuality certification and typicality toolbox."""

from .cones import ConeHRepresentation, cone_contains, facet_enumeration
from .fragment import (
    AccessibleFragment,
    GptFragment,
    accessible_fragment,
    build_fragment,
    depolarizing_map,
    fragment_from_json,
    fragment_to_json,
    load_fragment,
    save_fragment,
)
from .lp import (
    ClassicalityVerdict,
    RobustnessResult,
    certify_fragment,
    certify_operators,
    classify,
    robustness,
)
from .pom import (
    PomReport,
    PomTaskSpec,
    pom_case_trial,
    pom_noncontextual_rate,
    pom_optimal_states,
    pom_report,
    success_from_robustness,
)
from .quantum import born, complement, devectorize, purity, vectorize
from .sampling import (
    RngStream,
    SamplerConfig,
    euler_qubit_unitary,
    fixed_projective_grid,
    ginibre_mixed_state,
    haar_pure_state,
    haar_unitary,
    rotate_effects,
    sample_dichotomic_povm,
    sample_state,
)
from .typicality import (
    ScenarioSpec,
    TypicalityReport,
    estimate_typicality,
    minimal_preparations,
    run_trial,
    wilson_lower_bound,
)

__version__ = "0.1.0"
