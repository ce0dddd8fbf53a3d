"""Simulation and verification toolkit for coalescents with multiple collisions."""

__version__ = "0.1.0"

from .errors import ConfigError, NumericalError
from .measure import Beta, LogLogPareto, LogPareto, Tabulated, Uniform, parse_measure
from .rates import RateTable, g_nm, g_total, jump_distribution, lambda_mk
from .simulate import (
    SamplerJob,
    monte_carlo,
    simulate_coalescent_chain,
    simulate_coalescent_epochs,
    simulate_coupled,
    simulate_tagged,
    stream,
)

__all__ = [
    "Beta",
    "ConfigError",
    "LogLogPareto",
    "LogPareto",
    "NumericalError",
    "RateTable",
    "SamplerJob",
    "Tabulated",
    "Uniform",
    "g_nm",
    "g_total",
    "jump_distribution",
    "lambda_mk",
    "monte_carlo",
    "parse_measure",
    "simulate_coalescent_chain",
    "simulate_coalescent_epochs",
    "simulate_coupled",
    "simulate_tagged",
    "stream",
]
