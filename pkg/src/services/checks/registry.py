"""
Check Registry for verification targets.

Checks are registered once at import time and looked up by the CLI verb
or `verify` target that names them.
"""

from typing import Dict, List, Optional

from .base import BaseCheck


class CheckRegistry:
    """
    Central registry for checks, keyed by check_id.

    Usage:
        registry.register(DeltaCheck())
        check = registry.get_enabled("delta")
        if check:
            result = check.execute(context, qmax=15, nmax=50)
    """

    def __init__(self):
        self._checks: Dict[str, BaseCheck] = {}

    def register(self, check: BaseCheck) -> None:
        """
        Register a check instance.

        Raises:
            ValueError: If check_id is empty or already registered
        """
        if not check.check_id:
            raise ValueError(f"Check {check.__class__.__name__} has no check_id defined")

        if check.check_id in self._checks:
            raise ValueError(f"Check '{check.check_id}' is already registered")

        self._checks[check.check_id] = check

    def get(self, check_id: str) -> Optional[BaseCheck]:
        return self._checks.get(check_id)

    def get_enabled(self, check_id: str) -> Optional[BaseCheck]:
        """The check if it is registered and enabled, else None."""
        check = self._checks.get(check_id)
        if check and check.enabled:
            return check
        return None

    def list_all(self, enabled_only: bool = True) -> List[BaseCheck]:
        if enabled_only:
            return [c for c in self._checks.values() if c.enabled]
        return list(self._checks.values())

    def is_registered(self, check_id: str) -> bool:
        return check_id in self._checks


# Global singleton instance
check_registry = CheckRegistry()
