"""Outage, ASEP and high-SNR asymptotics for RIS-assisted RF / FSO dual-hop links."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    BPSK,
    AsymptoteReport,
    Hop,
    Modulation,
    SystemParams,
    asep_closed,
    asep_quadrature,
    asymptote,
    asymptotic_outage,
    e2e_cdf,
    fit_diversity_slope,
    outage,
)
from .channels import (  # noqa: E402
    DegreeWeights,
    FsoHopParams,
    HopDistribution,
    RfHopParams,
    degree_weights,
    fso_cdf,
    fso_pdf,
    fso_sample,
    rf_sample,
    rf_selected_cdf,
    rf_single_cdf,
)
from .montecarlo import EstimateWithCI, SimPlan, simulate_outage, simulate_sep  # noqa: E402
from .specfun import MeijerGSpec, ln_gamma, meijer_g, meijer_g_contour, meijer_g_series  # noqa: E402
