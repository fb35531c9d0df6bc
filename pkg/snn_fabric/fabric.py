from typing import Literal, Optional, Sequence
import logging
import snn_fabric

logger = logging.getLogger(__name__)


def build_fabric(
    cfg: snn_fabric.types.FabricConfig,
    num_cores: int,
    clusters: Optional[list[list[int]]] = None,
) -> snn_fabric.types.FabricTopology:
    """Build the router tree for `num_cores` cores.

    Without `clusters`, cores are packed into R1 routers in id order, giving
    `ceil(num_cores / cores_per_r1)` R1 routers below the single R2 router.

    Raises:
        FabricTooSmallError:  If the cores or the R1 routers exceed what one
                              R2 router can hold."""

    if num_cores > cfg.max_cores:
        raise snn_fabric.errors.FabricTooSmallError(
            "cores", num_cores, cfg.max_cores
        )
    if clusters is None:
        clusters = [
            list(range(i, min(i + cfg.cores_per_r1, num_cores)))
            for i in range(0, num_cores, cfg.cores_per_r1)
        ]
    if len(clusters) > cfg.r1_per_r2:
        raise snn_fabric.errors.FabricTooSmallError(
            "R1 routers", len(clusters), cfg.r1_per_r2
        )
    return snn_fabric.types.FabricTopology(config=cfg, clusters=clusters)


def routing_row_bits(cfg: snn_fabric.types.FabricConfig, depth: int) -> int:
    """R1 and R2 row bits per neuron, without the R0 bit. With the default
    geometry this is 10 at depth 2."""

    if depth not in (0, 1, 2):
        raise ValueError(f"router depth must be 0, 1 or 2, not {depth}")
    bits = 0
    if depth >= 1:
        bits += cfg.r1_rows * cfg.r1_row_bits
    if depth >= 2:
        bits += cfg.r2_rows * cfg.r2_row_bits
    return bits


def memory_bits_per_neuron(
    cfg: snn_fabric.types.FabricConfig, depth: int
) -> int:
    """Routing memory of one neuron for a network that needs routers up to
    `depth`: the R0 bit plus the row bits of every level in use."""

    return 1 + routing_row_bits(cfg, depth)


def fanin_capacity(cfg: snn_fabric.types.FabricConfig) -> int:
    return cfg.fanin_capacity


def granule(slot: int, core_size: int, rows: int) -> int:
    """Index of the contiguous slot range (half, fourth, ...) holding `slot`
    when a core is split into `rows` equal ranges."""

    return slot * rows // core_size


def row_selector(slot: int, core_size: int, rows: int) -> int:
    """Row value that listens to the granule holding `slot`. Zero is kept
    for a row that listens to nothing, so with `w` bits per row only the
    first `2^w - 1` granules can be selected."""

    return granule(slot, core_size, rows) + 1


def row_geometry(
    cfg: snn_fabric.types.FabricConfig,
    level: Literal["R1", "R2"],
) -> tuple[int, int]:
    """Number of rows and bits per row at `level`."""

    if level == "R1":
        return cfg.r1_rows, cfg.r1_row_bits
    return cfg.r2_rows, cfg.r2_row_bits


def listen_order(groups: Sequence[Sequence[int]], own: int) -> list[int]:
    """Cores of every group except `own`, starting with the group right
    after it and wrapping around. This is the order of `listen_cores` for
    groups that are not part of a topology yet."""

    return [
        c for offset in range(1, len(groups))
        for c in groups[(own + offset) % len(groups)]
    ]


def listen_cores(
    topology: snn_fabric.types.FabricTopology,
    level: Literal["R1", "R2"],
    core: int,
) -> list[int]:
    """Cores a neuron of `core` hears at `level`: its R1 siblings by
    relative position (R1) or the cores of the other R1 clusters by
    relative cluster index (R2). The core at index `u` is served by listen
    row `u mod rows`."""

    cluster_of = topology.core_cluster
    x = cluster_of[core]
    if level == "R1":
        return sorted(
            (c for c in topology.clusters[x] if c != core),
            key=lambda c: topology.core_offset(c, core),
        )
    position = topology.core_position
    return sorted(
        (c for c in range(topology.num_cores) if cluster_of[c] != x),
        key=lambda c: (topology.cluster_offset(c, core), position[c]),
    )


def row_sources(
    assignment: snn_fabric.types.CoreAssignment,
    cores: Sequence[int],
    row: int,
    value: int,
    rows: int,
) -> list[int]:
    """Neurons whose spikes reach a neuron through listen row `row` holding
    `value`, where `cores` is what that neuron hears at the row's level
    (see `listen_cores`)."""

    if value == 0:
        return []
    return sorted(
        i for u, c in enumerate(cores) if u % rows == row
        for i in assignment.cores[c]
        if granule(assignment.slot_of[i], assignment.core_size, rows) == value - 1
    )


def synthesize_tables(
    placement: snn_fabric.types.PlacementResult,
    topology: snn_fabric.types.FabricTopology,
    allow_partial: bool = False,
) -> snn_fabric.types.RoutingTables:
    """Write the listen tables that realize every placed edge.

    R0 edges set the crossbar bit of both endpoints. An R1 or R2 edge
    `s -> t` writes `row_selector(slot(s))` into the row of `t` that serves
    the sender's core (see `listen_cores`). That row then hears the same
    half (R1) or fourth (R2) of every core it serves. Programmable edges are
    listed verbatim.

    Raises:
        PartialPlacementError:  If the placement has unplaceable edges and
                                `allow_partial` is not set.
        TableCollisionError:    If a row would need two values, a selector
                                does not fit the row width, the sender is not
                                reachable at the edge's level, or a row would
                                deliver spikes from a neuron that has no edge
                                to `t`."""

    cfg = topology.config
    assignment = placement.assignment
    if len(placement.unplaceable) > 0 and not allow_partial:
        raise snn_fabric.errors.PartialPlacementError(
            f"{len(placement.unplaceable)} edges are unplaceable"
        )
    if assignment.num_cores != topology.num_cores:
        raise ValueError(
            f"placement uses {assignment.num_cores} cores, topology has {topology.num_cores}"
        )

    num_neurons = len(assignment.core_of)
    predecessors: list[set[int]] = [set() for _ in range(num_neurons)]
    for e in placement.dispositions:
        predecessors[e.dst].add(e.src)

    r0 = [0] * num_neurons
    r1 = [[0] * cfg.r1_rows for _ in range(num_neurons)]
    r2 = [[0] * cfg.r2_rows for _ in range(num_neurons)]

    for (s, t), level in placement.placed:
        if level == "R0":
            r0[s] = 1
            r0[t] = 1
            continue
        src_core, dst_core = assignment.core_of[s], assignment.core_of[t]
        tier: Literal["R1", "R2"] = "R1" if level == "R1" else "R2"
        num_rows, width = row_geometry(cfg, tier)
        rows = r1[t] if tier == "R1" else r2[t]
        cores = listen_cores(topology, tier, dst_core)
        if src_core not in cores:
            raise snn_fabric.errors.TableCollisionError((s, t),
                                                        f"core {src_core} is not reachable from core {dst_core} at {level}")
        row = cores.index(src_core) % num_rows
        value = row_selector(assignment.slot_of[s], cfg.core_size, num_rows)

        if value >= (1 << width):
            raise snn_fabric.errors.TableCollisionError((s, t),
                                                        f"{level} selector {value} does not fit {width} row bits")
        if rows[row] not in (0, value):
            raise snn_fabric.errors.TableCollisionError((s, t),
                                                        f"{level} row {row} already holds selector {rows[row]}")
        senders = row_sources(assignment, cores, row, value, num_rows)
        extra = sorted(set(senders) - predecessors[t])
        if len(extra) > 0:
            raise snn_fabric.errors.TableCollisionError((s, t),
                                                        f"{level} row {row} would also deliver from {extra}")
        rows[row] = value

    cluster_of, position_of = topology.core_cluster, topology.core_position
    return snn_fabric.types.RoutingTables(
        config=cfg,
        depth=placement.depth,
        cores=[
            snn_fabric.types.CoreEntry(
                core=c, r1_cluster=cluster_of[c], position=position_of[c]
            ) for c in range(topology.num_cores)
        ],
        neurons=[
            snn_fabric.types.NeuronTable(
                neuron=i,
                core=assignment.core_of[i],
                slot=assignment.slot_of[i],
                r0_bit=r0[i],
                r1_rows=[
                    snn_fabric.types.encode_row(v, cfg.r1_row_bits)
                    for v in r1[i]
                ],
                r2_rows=[
                    snn_fabric.types.encode_row(v, cfg.r2_row_bits)
                    for v in r2[i]
                ],
            ) for i in range(num_neurons)
        ],
        programmable=placement.programmable,
    )


def chip_spec_report(
    results: list[snn_fabric.types.PlacementResult],
    cfgs: list[snn_fabric.types.FabricConfig],
) -> snn_fabric.types.ChipSpecReport:
    """Tabulate one row per (placement, fabric) pair and mark the rows that
    are Pareto-minimal in (total routing bits, extra neurons). Rows with
    identical metrics are all kept."""

    if len(results) == 0 or len(results) != len(cfgs):
        raise ValueError(
            "chip_spec_report needs one fabric config per placement result"
        )

    rows: list[snn_fabric.types.ChipSpecRow] = []
    for result, cfg in zip(results, cfgs):
        num_cores = result.assignment.num_cores
        bits = memory_bits_per_neuron(cfg, result.depth)
        rows.append(
            snn_fabric.types.ChipSpecRow(
                core_size=cfg.core_size,
                num_cores=num_cores,
                r1_clusters=len(result.clusters),
                depth=result.depth,
                routing_row_bits=routing_row_bits(cfg, result.depth),
                bits_per_neuron=bits,
                total_routing_bits=num_cores * cfg.core_size * bits,
                extra_neurons=result.extra_neurons,
                unplaceable=len(result.unplaceable),
                programmable_used=len(result.programmable),
                fanin_capacity=cfg.fanin_capacity,
            )
        )

    def dominates(
        a: snn_fabric.types.ChipSpecRow, b: snn_fabric.types.ChipSpecRow
    ) -> bool:
        return (
            a.total_routing_bits <= b.total_routing_bits and
            a.extra_neurons <= b.extra_neurons and (
                a.total_routing_bits < b.total_routing_bits or
                a.extra_neurons < b.extra_neurons
            )
        )

    pareto = [
        i for i, r in enumerate(rows)
        if not any(dominates(other, r) for other in rows)
    ]
    logger.debug(f"chip spec report: {len(rows)} rows, pareto rows {pareto}")
    return snn_fabric.types.ChipSpecReport(rows=rows, pareto=pareto)
