"""Source-channel rate regions and separation checks for multiple-access relay channels."""

__version__ = "0.1.0"

from .dm_regions import (  # noqa: E402
    EntropyVector,
    RateVector,
    RegionReport,
    entropy_vector,
    evaluate_converse_mabrc,
    evaluate_converse_marc,
    evaluate_irregular,
    maximize_converse,
    regular_encoding_region,
    search_irregular,
)
from .expint import exp_integral_e1, exp_scaled_e1  # noqa: E402
from .fading import (  # noqa: E402
    FadingMarcConfig,
    FadingRegion,
    fading_report,
    mabrc_check,
    mabrc_kappa_star,
    phase_conditions,
    phase_region,
    rayleigh_conditions,
    rayleigh_region,
)
from .probability import (  # noqa: E402
    Alphabet,
    DmChannel,
    FactoredInputDist,
    JointPmf,
    JointSourceDist,
    ValidationError,
    conditional_entropy,
    entropy,
    mutual_information,
)
from .simulator import (  # noqa: E402
    BinningCode,
    LinkModel,
    SchemeConfig,
    run_scheme,
    threshold_sweep,
    verify_regular_vs_irregular,
)
