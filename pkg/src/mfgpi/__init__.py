"""Policy iteration for discrete mean field games on the periodic torus."""

from .errors import ConfigError, MaxIterationsExceeded, MfgError, RankDeficient, SingularSystem, UnknownId
from .evolutive import EvolutiveProblem, EvolutiveState, policy_iteration_evolutive
from .grid import PeriodicGrid, TimeGrid, quadrature
from .newton import NewtonConfig, newton_solve
from .presets import builtin_coupling, builtin_initial_data, builtin_potential
from .stationary import PiConfig, StationaryProblem, StationaryState, policy_iteration_stationary

__all__ = [
    "ConfigError",
    "EvolutiveProblem",
    "EvolutiveState",
    "MaxIterationsExceeded",
    "MfgError",
    "NewtonConfig",
    "PeriodicGrid",
    "PiConfig",
    "RankDeficient",
    "SingularSystem",
    "StationaryProblem",
    "StationaryState",
    "TimeGrid",
    "UnknownId",
    "builtin_coupling",
    "builtin_initial_data",
    "builtin_potential",
    "newton_solve",
    "policy_iteration_evolutive",
    "policy_iteration_stationary",
    "quadrature",
]
