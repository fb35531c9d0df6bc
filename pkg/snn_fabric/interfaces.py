from typing import Optional
import logging
import pydantic
import snn_fabric

logger = logging.getLogger(__name__)


class CompileResult(pydantic.BaseModel):
    """Everything one compile run produces."""

    assignment: snn_fabric.types.CoreAssignment
    distance_map: snn_fabric.types.DistanceMap
    grouping: snn_fabric.types.CoreGrouping
    topology: snn_fabric.types.FabricTopology
    placement: snn_fabric.types.PlacementResult
    tables: Optional[snn_fabric.types.RoutingTables] = None

    @property
    def complete(self) -> bool:
        return len(self.placement.unplaceable) == 0


class FabricCompiler:
    def __init__(
        self,
        config: Optional[snn_fabric.types.FabricConfig] = None,
    ):
        """Create a compiler for one fabric.

        Args:
            config:  The fabric to compile for. Defaults to a `FabricConfig()`
                     with all default values.
        """

        self.config = config if config is not None else snn_fabric.types.FabricConfig()

    def compile(
        self,
        net: snn_fabric.types.NetworkModel,
        allow_partial: bool = False,
        synthesize: bool = True,
    ) -> CompileResult:
        """Run the whole pipeline: assign neurons to cores, compute the
        distance map, group cores below R1 routers, place every connection
        and write the routing tables.

        Args:
            net:            The network to compile.
            allow_partial:  Write tables even when some connections are
                            unplaceable.
            synthesize:     Skip table synthesis when `False`; the sweep only
                            needs the placement metrics.

        Returns:  A `CompileResult`. `tables` is `None` when synthesis was
                  skipped.

        Raises:
            FabricTooSmallError:    If the network needs more cores or R1
                                    routers than the fabric has.
            PartialPlacementError:  If connections are unplaceable and
                                    `allow_partial` is not set.
        """

        cfg = self.config
        assignment = snn_fabric.placer.assign_cores(net, cfg.core_size)
        dm = snn_fabric.placer.compute_distance_map(net, assignment)
        grouping = snn_fabric.placer.group_cores(net, assignment, dm, cfg)
        topology = snn_fabric.fabric.build_fabric(
            cfg, assignment.num_cores, grouping.clusters
        )
        placement = snn_fabric.placer.place_connections(
            net, assignment, dm, topology
        )
        logger.info(
            f"compiled {net.neurons} neurons into {assignment.num_cores} cores, " +
            f"depth {placement.depth}, {len(placement.unplaceable)} unplaceable"
        )

        tables: Optional[snn_fabric.types.RoutingTables] = None
        if synthesize:
            tables = snn_fabric.fabric.synthesize_tables(
                placement, topology, allow_partial=allow_partial
            )

        return CompileResult(
            assignment=assignment,
            distance_map=dm,
            grouping=grouping,
            topology=topology,
            placement=placement,
            tables=tables,
        )

    def chip_spec(
        self,
        net: snn_fabric.types.NetworkModel,
        core_sizes: list[int],
    ) -> snn_fabric.types.ChipSpecReport:
        """Compile `net` once per core size (all other fabric fields kept)
        and tabulate the results with `chip_spec_report`."""

        results: list[snn_fabric.types.PlacementResult] = []
        cfgs: list[snn_fabric.types.FabricConfig] = []
        for size in core_sizes:
            cfg = with_core_size(self.config, size)
            compiled = FabricCompiler(cfg).compile(net, synthesize=False)
            results.append(compiled.placement)
            cfgs.append(cfg)
        return snn_fabric.fabric.chip_spec_report(results, cfgs)


def with_core_size(
    cfg: snn_fabric.types.FabricConfig, core_size: int
) -> snn_fabric.types.FabricConfig:
    """Copy of `cfg` with another core size. An explicit fan-in budget is
    capped at the capacity of the resized fabric."""

    fields = {**cfg.model_dump(exclude_unset=True), "core_size": core_size}
    budget = fields.pop("fanin_budget", None)
    resized = snn_fabric.types.FabricConfig.model_validate(fields)
    if budget is None:
        return resized
    if budget > resized.fanin_capacity:
        logger.info(
            f"fan-in budget {budget} capped at {resized.fanin_capacity} for core size {core_size}"
        )
    return snn_fabric.types.FabricConfig.model_validate({
        **fields,
        "fanin_budget": min(budget, resized.fanin_capacity),
    })
