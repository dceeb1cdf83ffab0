"""Disparate-impact repair of tabular data via exact discrete optimal
transport, plus fairness auditing of arbitrary binary classifiers."""

from .measures import (
    EmpiricalMeasure,
    EmptyGroupError,
    DimensionMismatchError,
    LabeledDataset,
    WeightedRow,
    group_measure,
    tv_distance_discrete,
)
from .transport import (
    Coupling,
    TransportResult,
    barycenter_from_coupling,
    cost_matrix,
    solve_transport,
    variance_functional,
    wasserstein2_1d,
)
from .repair import (
    RepairPlan,
    RepairedDataset,
    build_repair_plan,
    geometric_repair,
    random_repair,
    random_repair_from_draws,
    total_repair_A,
    total_repair_B,
    total_repair_C,
)
from .fairness import (
    DegenerateClassifierError,
    FairnessReport,
    PredictabilityReport,
    balanced_error_rate,
    di_ber_equivalence_check,
    disparate_impact,
    exhaustive_min_ber,
    min_ber_oracle,
    oae_gap,
    tv_ks_1d,
    tv_lower_bound_di,
)
from .classify import (
    LogisticModel,
    fit_logistic,
    misclassification_error,
    predict,
    predict_proba,
)
from .riskbound import (
    MCEstimate,
    SyntheticProblem,
    bayes_classifier,
    bound_theorem41,
    classifier_risk,
    excess_risk,
    lemma41_check,
    make_logistic_problem,
    make_ramp_problem,
    random_repair_risk_mixture,
)
from .dataio import (
    SchemaConfig,
    StandardizeParams,
    generic_schema,
    load_dataset,
    read_repaired_csv,
    split,
    standardize,
    write_dataset_csv,
    write_repaired_csv,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
