"""Command-signaling control panel toolkit.

Simulates the panel families of the compression scale as executable state
machines, solves the minimal-controls synthesis problems exactly, models
operator workload and response time, and serves live panel sessions to
interactive consoles.
"""

from .core import (
    ButtonEvent,
    ChangeEvent,
    CommandEmission,
    IndicatorCell,
    IndicatorFrame,
    PanelFamily,
    PanelSpec,
    PanelState,
    PlantState,
    PressResult,
    ProgramEntry,
    ProgramSchedule,
    UnitRef,
    ack_change,
    activate_program,
    make_plant,
    plant_apply,
    press_button,
    render_indicators,
    step_program,
    visible_units,
)
from .errors import (
    ConfigError,
    CscpError,
    FormatError,
    InfeasibleError,
    LayoutError,
    ScenarioError,
    UndefinedRatioError,
    UnknownUnitError,
)
from .metrics import CostCoefficients, MetricsRow, relative_metrics, response_time_table, wire_counts
from .sequential import CommandCatalog, build_catalog, decode_sequential, encode_sequential
from .simulate import (
    AckChanges,
    AwaitProgramLabel,
    FullStatusSweep,
    LampTest,
    Scenario,
    SessionLog,
    SetUnit,
    TimeModelParams,
    VerifyUnit,
    Wait,
    classify_ops,
    estimate_time,
    make_random_scenario,
    run_scenario,
    workload_ratio,
)
from .synthesis import (
    AddressPlan,
    ChoiceReport,
    CompressionProfile,
    FunctionGroup,
    HierarchyPlan,
    LintReport,
    LintViolation,
    MatrixGeometry,
    PanelConstraints,
    choose_panel,
    compression_profile,
    enumerate_scale,
    lint_autonomy,
    synthesize_address,
    synthesize_hierarchy,
    synthesize_matrix,
)

__version__ = "0.1.0"
