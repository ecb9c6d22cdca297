"""Domain-based network monitoring registry for grids.

Edge entities are partitioned into monitoring domains; designated theodolite
pairs measure the connectivity between domains, and consumer queries read
those measurements on behalf of Computing and Storage entities.
"""

from gridmon.errors import GridMonError
from gridmon.metrics import (
    ConnectivityValue,
    Measurement,
    MetricDefinition,
    MetricStore,
    Ordering,
    Polarity,
    compare,
)
from gridmon.query import EntityMetricResult, QueryEngine
from gridmon.registry import (
    DesignationLookup,
    EdgeEntity,
    EntityKind,
    Registry,
    TheodoliteDesignation,
)
from gridmon.validator import (
    IntraDomainView,
    ValidationReport,
    coverage_gaps,
    mesh_cost,
    validate_domain,
)

__all__ = [
    "ConnectivityValue",
    "DesignationLookup",
    "EdgeEntity",
    "EntityKind",
    "EntityMetricResult",
    "GridMonError",
    "IntraDomainView",
    "Measurement",
    "MetricDefinition",
    "MetricStore",
    "Ordering",
    "Polarity",
    "QueryEngine",
    "Registry",
    "TheodoliteDesignation",
    "ValidationReport",
    "compare",
    "coverage_gaps",
    "mesh_cost",
    "validate_domain",
]
