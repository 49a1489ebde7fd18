"""Floquet scattering off oscillating complex impurities on a tight-binding chain."""

from .boundstates import BoundStateReport, find_bound_states
from .config import ExperimentConfig, load_config, parse_config
from .errors import FloquetError
from .model import ChannelSet, LatticeModel, build_channel_set, momentum_from_energy
from .multi import solve_floquet_lattice
from .single import ScatteringAmplitudes, energy_grid, solve_amplitudes, spectral_scan
from .timedomain import free_propagate, init_gaussian, propagate

__all__ = [
    "BoundStateReport",
    "ChannelSet",
    "ExperimentConfig",
    "FloquetError",
    "LatticeModel",
    "ScatteringAmplitudes",
    "build_channel_set",
    "energy_grid",
    "find_bound_states",
    "free_propagate",
    "init_gaussian",
    "load_config",
    "momentum_from_energy",
    "parse_config",
    "propagate",
    "solve_amplitudes",
    "solve_floquet_lattice",
    "spectral_scan",
]
