"""Exception hierarchy.

Every failure the library can report has its own class, and the class name is
the error name surfaced by the HTTP service and the CLI.
"""

from __future__ import annotations


class GridMonError(Exception):
    """Base class for all gridmon errors."""

    @property
    def name(self) -> str:
        return type(self).__name__

    def __str__(self) -> str:
        # KeyError subclasses would otherwise repr() their message
        return self.args[0] if self.args else self.name


# registry
class InvalidId(GridMonError, ValueError):
    pass


class DuplicateEntity(GridMonError, ValueError):
    pass


class UnknownEntity(GridMonError, LookupError):
    pass


class NotATheodolite(GridMonError, ValueError):
    pass


class WrongDomain(GridMonError, ValueError):
    pass


class SelfPair(GridMonError, ValueError):
    pass


class AlreadyDesignated(GridMonError, ValueError):
    pass


class UnknownDesignation(GridMonError, LookupError):
    pass


class EntityInUse(GridMonError, ValueError):
    pass


class DesignationInUse(GridMonError, ValueError):
    pass


# metrics
class DuplicateMetric(GridMonError, ValueError):
    pass


class InvalidRange(GridMonError, ValueError):
    pass


class UnknownMetric(GridMonError, LookupError):
    pass


class UnknownTheodolite(GridMonError, LookupError):
    pass


class UndesignatedPair(GridMonError, ValueError):
    pass


class OutOfRange(GridMonError, ValueError):
    pass


class NonFinite(GridMonError, ValueError):
    pass


class MetricMismatch(GridMonError, ValueError):
    pass


# query
class SameDomain(GridMonError, ValueError):
    pass


# validator
class EmptyView(GridMonError, ValueError):
    pass


class MixedMetrics(GridMonError, ValueError):
    pass


class ZeroCost(GridMonError, ValueError):
    pass


class InvalidCost(GridMonError, ValueError):
    pass


# simulator
class InvalidSpec(GridMonError, ValueError):
    pass


class IncompleteMesh(GridMonError, ValueError):
    pass


# service / persistence
class CorruptSnapshot(GridMonError, ValueError):
    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class IoFailure(GridMonError, OSError):
    pass


class BindFailure(GridMonError, OSError):
    pass


class InvalidConfig(GridMonError, ValueError):
    pass
