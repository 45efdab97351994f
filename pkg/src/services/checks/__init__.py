"""
Checks module for verification targets.

This module provides the check registry and the individual checks run by
the `verify`, `eval-l`, `sweep` and `decompose` verbs.
"""

from .registry import check_registry, CheckRegistry
from .base import BaseCheck, CheckResult, RunContext

# Import and register checks
from .charsum_check import CharsumCheck
from .conductor_check import ConductorCheck
from .decompose_check import DecomposeCheck
from .delta_check import DeltaCheck
from .hecke_check import HeckeCheck
from .istar_check import IstarCheck
from .lvalue_check import EvalLCheck, LValueCheck, SweepCheck
from .poisson_check import PoissonCheck
from .stationary_check import StationaryCheck
from .voronoi_check import VoronoiCheck
from .wdagger_check import WDaggerCheck

# Targets of `verify <target>`
VERIFY_TARGETS = [
    "delta", "hecke", "voronoi", "stationary", "wdagger",
    "conductor", "poisson", "charsum", "istar", "lvalue",
]


# Register all checks at module load
def _register_checks():
    """Register all available checks with the global registry."""
    checks = [
        DeltaCheck(),
        HeckeCheck(),
        VoronoiCheck(),
        StationaryCheck(),
        WDaggerCheck(),
        ConductorCheck(),
        PoissonCheck(),
        CharsumCheck(),
        IstarCheck(),
        LValueCheck(),
        EvalLCheck(),
        SweepCheck(),
        DecomposeCheck(),
    ]
    for check in checks:
        if not check_registry.is_registered(check.check_id):
            check_registry.register(check)

_register_checks()

__all__ = [
    'check_registry',
    'CheckRegistry',
    'BaseCheck',
    'CheckResult',
    'RunContext',
    'VERIFY_TARGETS',
]
