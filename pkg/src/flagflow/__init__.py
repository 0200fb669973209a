"""Morse decompositions and normal hyperbolicity of translation flows on real flag manifolds."""

from .dynamics import (
    DecayReport,
    FlowSpec,
    classify_limit,
    decay_verify,
    evolve_adapted,
    fiber_invariance_check,
    flow,
    flow_map,
    trajectory,
    unipotent_fixed,
)
from .errors import *  # noqa: F401,F403
from .flag_geometry import (
    Flag,
    FlagType,
    TangentVec,
    act,
    flag_from_basis,
    induced_vector,
    pushforward,
    tangent_inner,
    tangent_norm,
)
from .lie_core import (
    AlgElem,
    Chamber,
    GroupElem,
    SemisimpleSpec,
    additive_jordan,
    ad_eigenspaces,
    cartan_inner,
    chamber_normalize,
    mu_gap,
    multiplicative_jordan,
)
from .morse import (
    DimensionProfile,
    MorseComponent,
    base_point,
    classify_flag,
    conley_shift,
    enumerate_components,
    factor_structure,
    normal_fiber,
    sample_point,
    whitney_check,
)
from .periodic import PeriodicSpec, TrigTerm, monodromy, periodic_components, periodic_decay_verify

__version__ = "0.1.0"
