"""Finite-alphabet toolkit for three-receiver broadcast channels with
transmitter side information: achievable rate regions, mechanical
Fourier-Motzkin re-derivation of the bounds from the coding scheme's
constraint systems, channel-ordering checks, and desk-scale Monte Carlo
simulation of the layered binning scheme."""

from .probability import (
    AuxFactorization,
    ChannelSpec,
    JointPmf,
    Kernel,
    Pmf,
    ValidationError,
    build_joint,
    check_markov,
    conditional_mutual_information,
    entropy,
    marginalize,
    mutual_information,
    augment_outputs_with_state,
)
from .regions import (
    RateBoundsMultilevel,
    RateBoundsTriple,
    RegionPolytope,
    assemble_region,
    less_noisy_bounds,
    multilevel_bounds,
    polytope_from_bounds,
    receiver_si_bounds,
    reference_bounds,
)
from .ordering import OrderKind, OrderVerdict, OrderWitness, is_degraded, is_less_noisy
from .search import SearchConfig, grid_enumerate, scalarized_search, search_region
from .simulate import (
    Codebook,
    EncodingFailure,
    SimConfig,
    SimResult,
    decode,
    generate_codebooks,
    gp_encode,
    is_jointly_typical,
    run_trials,
)
from .specfile import parse_aux_spec, parse_channel_spec

__version__ = "0.1.0"
