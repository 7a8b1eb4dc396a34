"""Noisy non-adaptive group testing under Bernoulli designs.

Rate formulas live in :mod:`gtlab.rates`, their special functions in
:mod:`gtlab.special`, the random model in :mod:`gtlab.core`, decoders in
:mod:`gtlab.decoders` and the Monte-Carlo harness in :mod:`gtlab.harness`.
"""

from .core import (
    ChannelKind,
    ChannelModel,
    OutcomeVector,
    TestMatrix,
    apply_channel,
    generate_bernoulli_matrix,
    noiseless_outcomes,
    sample_defective_set,
)
from .decoders import (
    Algorithm,
    DecodeResult,
    DecoderConfig,
    comp_decode,
    dd_decode,
    decode,
    ml_decode,
    ndd_rz_decode,
    ndd_sym_decode,
    ndd_z_decode,
)
from .errors import ConfigError, ConsistencyError, DomainError, EnumerationLimitError, ImpossibleOutcomeError
from .harness import ErrorEstimate, ExperimentConfig, estimate_error_prob, rate_curve_export, run_trial, sweep_n
from .special import (
    binary_entropy_bits,
    d_gamma,
    d_gamma_inverse,
    intersection_solve,
    lambert_w0,
    lambert_w_m1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
