from .compare import compare, power_study
from .config import ConfigError, ExperimentConfig, load_config
from .run import RunTrace, load_trace, run, save_trace
