"""Process-state simulation of multitime quantum measurements and Leggett-Garg tests."""

from lgps.errors import (
    ConventionError,
    DegenerateConditioningError,
    DomainError,
    InapplicableError,
    InvalidInstrumentError,
    LabelError,
    LgpsError,
    SchemaError,
    ShapeError,
    UsageError,
)
from lgps.opstate import (
    LabeledOperator,
    choi_state,
    max_entangled_link,
    op_inner,
    partial_contract,
    tensor_product,
)
from lgps.process import (
    Instrument,
    ProcessState,
    Scenario,
    build_process_state,
    markov_product_state,
    n_point_operation,
    reduce_process_state,
)
from lgps.lg import (
    LGReport,
    ProbabilityTable,
    correlation,
    joint_probability,
    k3,
    k3_with_deviation,
    marginal_probability,
    markov_order_k3,
    sequential_oracle,
)
from lgps.structure import (
    QCClassification,
    classify,
    condition_residual,
    disturbance_conditions,
    markov_order_form_residual,
    markov_product_residual,
    qc_projection,
)
from lgps.scenarios import (
    TwoQubitModel,
    build_two_qubit_scenario,
    halfpi_reduced_state,
    k3_curve,
    paper_measurement_plan,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
