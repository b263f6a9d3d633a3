"""Pure differentially private agnostic learning over finite classes.

Item-level and user-level learners, a private threshold learner, exact
binomial tools for user-level amplification, and privacy audits.
"""

from ._kernels import BACKEND
from .binomial import (
    BinomialSplit,
    Constants,
    binom_tail,
    binom_tv,
    choose_median_split,
    choose_s,
    choose_t,
    find_separating_threshold,
)
from .dp_core import (
    MechanismOutcome,
    PrivacyBudget,
    SensitivitySpec,
    exp_mech_probabilities,
    exponential_mechanism,
    laplace_mechanism,
    laplace_sample,
    make_rng,
)
from .errors import BudgetError, ConfigError, DPAgnosticError, InfeasibleError, ParameterError
from .learners import LearnParams, MinErrorEstimate, learn_item, learn_user, private_compare, private_min_error
from .model import (
    DiscreteJointDistribution,
    Domain,
    Hypothesis,
    HypothesisClass,
    UserDataset,
    UserErrorParams,
    empirical_disagreement,
    empirical_error,
    population_error,
    population_user_disagreement,
    population_user_error,
    sample_dataset,
    surrogate_score,
    user_disagreement,
    user_error,
    user_surrogate_score,
)
from .representation import Representation, sample_class, trivial_representation
from .threshold import ThresholdConfig, learn_threshold, private_median, private_threshold

__version__ = "0.1.0"
