from .config import *
from .flows import *
from .records import *
from .runner import *
from .selftest import *
from .tables import *

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ExperimentRunner",
    "RunRecord",
    "StepRow",
    "build_table",
    "intrinsic_time_gaps",
    "load_config",
    "parse_config_text",
    "run_experiment",
    "run_flow",
    "run_selftest",
    "summarize",
    "write_table"
]
