"""
Seeded generator source.
[CTX:PBI-1:1-1:INSTANCE]
"""
import logging
from collections.abc import Iterator
from typing import Optional, Sequence

from fleet_routing.core.source import InstanceSource, NamedInstance
from fleet_routing.instance import aggregate_customers, fleet_from_document, generate_instance, radius_for_cluster_count

logger = logging.getLogger(__name__)


class GeneratedSource(InstanceSource):
    """
    Yields one generated instance per seed.

    Instances can optionally be aggregated, either with a fixed clustering
    radius or with a radius bisected to reach a target customer count.
    """

    def __init__(
        self,
        seeds: Sequence[int],
        n_customers: int,
        n_commodities: int = 2,
        profile: str = "standard",
        radius: float = 0.0,
        target_customers: Optional[int] = None,
    ):
        self.seeds = list(seeds)
        self.n_customers = n_customers
        self.n_commodities = n_commodities
        self.profile = profile
        self.radius = radius
        self.target_customers = target_customers

    @property
    def name(self) -> str:
        return "generated"

    def instances(self) -> Iterator[NamedInstance]:
        for seed in self.seeds:
            inst = generate_instance(
                seed,
                self.n_customers,
                self.n_commodities,
                self.profile,
                name=f"{self.profile}-{self.n_customers}-s{seed}",
            )
            radius = self.radius
            if self.target_customers is not None:
                radius = radius_for_cluster_count(inst, self.target_customers)
            if radius > 0:
                inst = aggregate_customers(inst, radius)
            logger.debug(
                f"[CTX:PBI-1:1-1:INSTANCE] Generated {inst.name} with {inst.n_customers} customers"
            )
            yield NamedInstance(
                name=inst.name,
                instance=inst,
                fleet=fleet_from_document(inst),
                metadata={"seed": seed, "profile": self.profile, "radius": radius},
            )
