"""Energy-concern variability modeling, design-time sustainability analysis,
and a self-greening adaptation runtime with a Media Store simulator."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Configuration,
    VariabilityModel,
    apply_change,
    enumerate_configurations,
    load_model,
    propagate_selection,
    validate_configuration,
)
from .profiles import (  # noqa: F401
    CompositionChain,
    EnergyProfile,
    ProfileRepository,
    compose_energy,
    energy_at,
    load_repository,
    output_at,
)
from .analysis import (  # noqa: F401
    compare,
    derive_rules,
    export_plot_data,
    find_crossovers,
    partition_greenest,
    savings,
    simplify_partition,
)
from .rules import EcaRule, load_rules  # noqa: F401
from .runtime import MonitorState, aggregate, evaluate, observe, reconfigure  # noqa: F401
from .simulation import (  # noqa: F401
    WorkloadTrace,
    generate_workload,
    oracle_lower_bound,
    reference_workload,
    report,
    run_adaptive,
    run_static,
)
