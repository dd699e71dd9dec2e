"""Model selection under misspecification: QMLE fits, sandwich contrasts, GAIC/GBIC/SIC."""

from .criteria import CriterionReport, aic, bic, gaic, gbic, score_model, sic, sic_half_decomposition
from .family import Family, Kind, LinkValues, b_sum, evaluate_link
from .qmle import Dataset, FitResult, fit_qmle, quasi_log_likelihood
from .sandwich import SandwichPair, estimate_sandwich
from .search import CandidateModel, RawData, SelectionResult, best_subset_per_size, build_design, select
from .simlab import FrequencyTable, SimConfig, run_campaign

__version__ = "0.1.0"
