"""Compressive channel estimation for beyond-diagonal RIS.

The measurement tensor of a group-connected BD-RIS link has a Tucker-3
structure whose core is sparse for few-path channels. STORM recovers the
core support greedily (OMP), STAR from the noise subspace of the mode-3
unfolding; both then factor every support row as a Kronecker rank-one term
to read off the beam-domain angles and gains.
"""

from .dictionary import DictionarySet, build_dictionaries, column_for_pair
from .errors import InvalidArgument, NumericFailure, ResourceLimit
from .estimators import (
    EstimateResult,
    PathComponent,
    SupportEstimate,
    nmse,
    oracle_ls,
    reconstruct,
    stage2_factorize,
    star,
    star_support,
    storm,
    storm_support,
    vectorized_cs,
)
from .harness import SweepResult, SweepSpec, emit, run_sweep, run_trial
from .scenario import (
    ChannelInstance,
    MeasurementSet,
    PathSet,
    ScenarioConfig,
    TrainingDesign,
    build_channels,
    draw_instance,
    gen_paths,
    gen_training,
    synthesize_frame,
    synthesize_measurements,
    true_composite_channel,
    true_core_unfolding,
)

__version__ = "0.1.0"
