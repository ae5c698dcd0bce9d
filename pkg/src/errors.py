"""
Exception hierarchy for the simulator
Every error carries the process exit code run.py reports for it
"""
from config import EXIT_IO, EXIT_USAGE, EXIT_VALIDATION


class SimulationError(Exception):
    """Base class for all simulator errors"""
    exit_code = EXIT_VALIDATION


class GeometryError(SimulationError):
    """Array geometry does not support the requested operation"""


class DimensionError(SimulationError):
    """Shapes or lengths of inputs do not conform"""


class ArgumentError(SimulationError):
    """An argument lies outside its allowed range"""


class ConfigurationError(SimulationError):
    """Scenario dimensions violate a structural constraint"""


class SingularChannelError(SimulationError):
    """Effective channel is rank deficient"""


class DegeneratePrecoderError(SimulationError):
    """Composite precoder has zero power"""


class EstimationError(SimulationError):
    """Not enough data to estimate a quantity"""


class ScenarioValidationError(SimulationError):
    """Scenario file content is invalid"""


class ScenarioFileError(SimulationError):
    """Scenario or output file cannot be read or written"""
    exit_code = EXIT_IO


class UsageError(SimulationError):
    """Command line or preset name is invalid"""
    exit_code = EXIT_USAGE
