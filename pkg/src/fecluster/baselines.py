"""Non-learned comparison systems built from surface syntax.

Both baselines assign a role per instance (position flag or dependency
label) and merge it with the true frame, so a role value reused across
frames still yields distinct final clusters.
"""

from __future__ import annotations

from .clustering import FEClustering
from .corpus import Dataset


def boolean_cluster(test_set: Dataset) -> FEClustering:
    """Role = whether the argument precedes or follows its verb."""
    return FEClustering({
        inst.instance_id: (inst.frame, inst.position.value)
        for inst in test_set.instances
    })


def dependency_cluster(test_set: Dataset) -> FEClustering:
    """Role = dependency relation of the argument's head word."""
    return FEClustering({
        inst.instance_id: (inst.frame, inst.dep_label)
        for inst in test_set.instances
    })
