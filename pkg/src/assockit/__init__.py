"""Association analysis for contingency tables built from coded projective
or free-association data."""

__version__ = "0.1.0"

from .association import (
    CellResult,
    OmnibusResult,
    cellwise_tests,
    chi_squared_test,
    fisher_exact_2x2,
    fisher_exact_montecarlo,
    pct_diff_matrix,
)
from .ca import CaSolution, export_biplot, fit_ca, standardized_residuals
from .compare import (
    AgreementResult,
    Configuration,
    Dendrogram,
    ProcrustesResult,
    agreement_rates,
    hcluster,
    procrustes_fit,
    procrustes_test,
    tanglegram_export,
)
from .errors import AssocError
from .numerics import chi2_sf, log_choose, noncentral_chi2_cdf, svd
from .power import EffectSizes, PowerQuery, chi2_power, effect_sizes, required_n
from .reliability import CodingMatrix, MentionLists, cognitive_salience, cohens_kappa, krippendorff_alpha
from .table import ContingencyTable, build_table, collapse_cell, criteria_report, expected_matrix
