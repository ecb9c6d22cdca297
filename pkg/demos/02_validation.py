# Is a domain small enough that one theodolite can speak for all its members?
#
# The check compares path costs inside the domain with costs to the outside.
# Internal paths should be similar to each other (ratio <= rho), and all of
# them should be negligible next to the cheapest external path (<= epsilon).

from gridmon import IntraDomainView, validate_domain
from gridmon.simulator import DELAY

view = IntraDomainView.build(
    "D1", DELAY,
    internal=[("C1", "gw", 1.0), ("C2", "gw", 1.2), ("S1", "gw", 0.9)],
    external=[("T1", "D2", 40.0), ("T1", "D3", 55.0)],
)
report = validate_domain(view)
print(report.table())

# one slow member breaks comparability
view = IntraDomainView.build(
    "D1", DELAY,
    internal=[("C1", "gw", 1.0), ("C2", "gw", 6.0)],
    external=[("T1", "D2", 40.0)],
)
print()
print(validate_domain(view).table())

# looser thresholds let this domain through
print()
print(validate_domain(view, rho=10, epsilon=0.2).passes)
