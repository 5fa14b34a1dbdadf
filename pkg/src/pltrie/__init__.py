"""Exact probability tries: interval coding, hybrid archives, cache analysis."""

from .errors import (
    AbsoluteContinuityError,
    DecodeError,
    ModelFormatError,
    PltError,
    SequenceError,
    VocabularyError,
    ZeroProbabilityError,
)
from .model import (
    END_NAME,
    ESCAPE_NAME,
    ConditionalDistribution,
    EscapeModel,
    GenerativeModel,
    NgramModel,
    PolicyModel,
    TableModel,
    Vocabulary,
    ZipfModel,
    as_fraction,
    format_rational,
    from_policy,
    kl_at_prefix,
    load_model,
    ngram_model,
    parse_model,
    save_model,
    table_model,
    with_escape,
    zipf_model,
)
from .trie import Plt, PltNode, longest_common_prefix, materialize
from .codec import (
    Bitstream,
    Interval,
    ceil_neg_log2,
    code_length,
    decode_bits,
    decode_interval,
    decode_record,
    encode_bits,
    encode_interval,
    encode_record,
)
from .hybrid import (
    DescriptionLength,
    HybridArchive,
    TierThresholds,
    description_length,
    load_archive,
    lossy_pack,
    pack,
    parse_archive,
    route_tier,
    save_archive,
    serialize_archive,
    split,
    unpack,
)
from .cachesim import (
    POLICIES,
    CacheSimReport,
    CacheState,
    CostModel,
    SampleRow,
    TZero,
    WorkloadSpec,
    default_sample_steps,
    bayesian_estimate,
    boundary_gap,
    break_even,
    coverage_log_approx,
    expected_swap_time,
    retention_value,
    selective_invalidation,
    simulate,
    swap_time_exceedance,
    swap_time_markov,
    swap_time_oracle,
    t_rank,
    t_zero,
    zipf_coverage,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
