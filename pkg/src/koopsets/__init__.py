"""Set-valued operator numerics for time-invariant control systems.

The package samples three operator families of a controlled ODE over
finite control samples and verifies their structural identities at desk
scale: composition operators on observables (semigroup law, homogeneity,
subadditivity, Lipschitz continuity), their gradient-field generators
(first-order difference-quotient convergence, convexification of the
outer limit, transport residuals), pushforwards of atomic measures
(duality, weak generators, the support-function adjoint inequality), and
the eigenstructure of linear feedback loops (eigenfunction relations,
spectral mapping, converse probes, eigenvalue addition under products).

``koopsets.cli`` exposes the scenario runner; the remaining modules are a
library mirroring that structure.
"""

from .flows import (
    ControlPoint,
    ControlSampleSet,
    ControlSignal,
    FlowDivergenceError,
    FlowEstimateReport,
    FlowResult,
    PrimitiveField,
    SpliceError,
    VectorFieldSpec,
    check_continuity_in_control,
    check_flow_estimates,
    control_distance,
    flow_on_grid,
    flow_points,
    integrate_flow,
    splice,
    splice_closure,
    trajectory_csv,
)
from .observables import (
    Bump,
    Constant,
    GridSampled,
    LinearWindow,
    Observable,
    ObservableSet,
    Power,
    Product,
    Scaled,
    SpatialGrid,
    Sum,
    WindowEscapeError,
    compose_with_flow,
    observable_csv,
    sup_norm_diff,
)
from .setops import (
    DiagnosticTable,
    InclusionReport,
    combine,
    convex_combinations,
    diagnostic_csv,
    fit_rate,
    hausdorff,
    kuratowski_diagnostic,
    scaled_difference_set,
)
from .koopman import (
    LipschitzReport,
    build_observable_curve,
    check_homogeneity,
    check_lipschitz_in_observable,
    check_semigroup,
    check_subadditivity,
    koopman_set,
)
from .liouville import (
    GeneratorStudy,
    TransportResidualRow,
    generator_study,
    halving_ratios,
    inclusion_residual,
    liouville_set,
    study_csv,
    transport_solve,
    two_phase_signal,
)
from .perron import (
    AdjointReport,
    ParticleMeasure,
    PerronStudy,
    TestBank,
    check_adjoint_inequality,
    check_duality,
    divergence_pairing,
    pairing,
    particles_csv,
    perron_generator_study,
    pushforward,
)
from .spectral import (
    EigenPair,
    ProbeRow,
    ProbeTable,
    converse_spectral_probe,
    eigen_product_check,
    eigen_table_csv,
    liouville_eigenpairs_linear,
    verify_liouville_eigen,
    verify_spectral_mapping,
)
from .checks import (
    CheckContext,
    CheckOutcome,
    CheckSpec,
    REGISTRY,
    list_checks_text,
)
from .cli import Scenario, ScenarioError, load_scenario, run_scenario

__version__ = "0.1.0"
