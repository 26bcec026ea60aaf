"""Q-filter disturbance-observer simulation, Lyapunov bounds and tau design."""
from .dob import QFilterConfig
from .errors import ConfigError, NotHurwitzError, NumericalError
from .model import NominalModel, OuterController, PlantModel, Scenario, Signal, StateFunction

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "NotHurwitzError", "NumericalError", "NominalModel", "OuterController",
    "PlantModel", "QFilterConfig", "Scenario", "Signal", "StateFunction",
]
