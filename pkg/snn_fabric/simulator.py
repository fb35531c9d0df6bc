from typing import Iterator, Optional
import logging
import snn_fabric

logger = logging.getLogger(__name__)


def _router_hops(
    packet: snn_fabric.types.SpikePacket,
    topology: snn_fabric.types.FabricTopology,
    src_core: int,
    dst_core: int,
    programmable: bool,
) -> list[snn_fabric.types.Hop]:
    """Walk a packet from `src_core` to `dst_core` through the router tree.

    Every router rewrites the distance field to the number of hops left
    until the destination core. The router that hands the packet to the
    destination's cores replaces the address with the sender's row selector
    at its level; the port it arrives on picks the listen row."""

    cfg = topology.config
    cluster_of = topology.core_cluster
    slot = packet.source_core_local_id
    hops: list[snn_fabric.types.Hop] = []

    def selector(rows: int) -> int:
        if programmable:
            return 0
        return snn_fabric.fabric.row_selector(slot, cfg.core_size, rows)

    if src_core == dst_core:
        packet = packet.model_copy(
            update={"current_level": "R0", "distance_field": 0, "address": 0}
        )
        hops.append(
            snn_fabric.types.Hop(
                router=f"R0[core {src_core}]",
                level="R0",
                direction="local",
                distance_field=packet.distance_field,
                address_bits=0,
            )
        )
        return hops

    x, y = cluster_of[src_core], cluster_of[dst_core]
    if x == y:
        packet = packet.model_copy(
            update={
                "current_level": "R1",
                "distance_field": 1,
                "address": selector(cfg.r1_rows),
            }
        )
        hops.append(
            snn_fabric.types.Hop(
                router=f"R1[{x}]",
                level="R1",
                direction="up",
                distance_field=packet.distance_field,
                address_bits=packet.address.bit_length(),
            )
        )
    else:
        packet = packet.model_copy(
            update={"current_level": "R1", "distance_field": 3, "address": 0}
        )
        hops.append(
            snn_fabric.types.Hop(
                router=f"R1[{x}]",
                level="R1",
                direction="up",
                distance_field=packet.distance_field,
                address_bits=0,
            )
        )
        packet = packet.model_copy(
            update={
                "current_level": "R2",
                "distance_field": 2,
                "address": selector(cfg.r2_rows),
            }
        )
        hops.append(
            snn_fabric.types.Hop(
                router="R2",
                level="R2",
                direction="down",
                distance_field=packet.distance_field,
                address_bits=packet.address.bit_length(),
            )
        )
        packet = packet.model_copy(
            update={"current_level": "R1", "distance_field": 1}
        )
        hops.append(
            snn_fabric.types.Hop(
                router=f"R1[{y}]",
                level="R1",
                direction="down",
                distance_field=packet.distance_field,
                address_bits=0,
            )
        )
    hops.append(
        snn_fabric.types.Hop(
            router=f"core[{dst_core}]",
            level="core",
            direction="down",
            distance_field=0,
            address_bits=0,
        )
    )
    return hops


def _check_source(tables: snn_fabric.types.RoutingTables, source: int) -> None:
    if source < 0 or source >= len(tables.neurons):
        raise snn_fabric.errors.UnknownNeuronError(
            f"source {source} is not a neuron of the tables (0..{len(tables.neurons) - 1})"
        )


def _traverse(
    tables: snn_fabric.types.RoutingTables,
    topology: snn_fabric.types.FabricTopology,
    source: int,
) -> Iterator[snn_fabric.types.DeliveryTrace]:
    cfg = tables.config
    src = tables.neurons[source]
    members: list[list[snn_fabric.types.NeuronTable]] = [
        [] for _ in range(topology.num_cores)
    ]
    for table in tables.neurons:
        members[table.core].append(table)
    packet = snn_fabric.types.SpikePacket(
        source_core_local_id=src.slot, distance_field=0, current_level="R0"
    )

    # crossbar
    if src.r0_bit == 1:
        for t in members[src.core]:
            if t.neuron != source and t.r0_bit == 1:
                yield snn_fabric.types.DeliveryTrace(
                    source=source,
                    receiver=t.neuron,
                    hops=_router_hops(packet, topology, src.core, src.core, False),
                )

    # R1 siblings match the sender's half in the row serving its core
    x = topology.core_cluster[src.core]
    r1_value = snn_fabric.fabric.row_selector(src.slot, cfg.core_size, cfg.r1_rows)
    for core in topology.clusters[x]:
        if core == src.core:
            continue
        cores = snn_fabric.fabric.listen_cores(topology, "R1", core)
        row = cores.index(src.core) % cfg.r1_rows
        for t in members[core]:
            if snn_fabric.types.decode_row(t.r1_rows[row]) == r1_value:
                yield snn_fabric.types.DeliveryTrace(
                    source=source,
                    receiver=t.neuron,
                    hops=_router_hops(packet, topology, src.core, core, False),
                )

    # R2: cores of every other cluster match the sender's fourth
    r2_value = snn_fabric.fabric.row_selector(src.slot, cfg.core_size, cfg.r2_rows)
    for core in range(topology.num_cores):
        if topology.core_cluster[core] == x:
            continue
        cores = snn_fabric.fabric.listen_cores(topology, "R2", core)
        row = cores.index(src.core) % cfg.r2_rows
        for t in members[core]:
            if snn_fabric.types.decode_row(t.r2_rows[row]) == r2_value:
                yield snn_fabric.types.DeliveryTrace(
                    source=source,
                    receiver=t.neuron,
                    hops=_router_hops(packet, topology, src.core, core, False),
                )

    for s, d in tables.programmable:
        if s == source:
            yield snn_fabric.types.DeliveryTrace(
                source=source,
                receiver=d,
                programmable=True,
                hops=_router_hops(
                    packet, topology, src.core, tables.neurons[d].core, True
                ),
            )


def trace(
    tables: snn_fabric.types.RoutingTables,
    topology: Optional[snn_fabric.types.FabricTopology] = None,
    source: int = 0,
) -> list[snn_fabric.types.DeliveryTrace]:
    """Hop log of every delivery of a spike from `source`, ordered by
    receiver. A receiver reached over two paths appears twice.

    Raises:
        UnknownNeuronError:  If `source` is not a neuron of the tables."""

    _check_source(tables, source)
    if topology is None:
        topology = tables.topology
    return sorted(
        _traverse(tables, topology, source),
        key=lambda t: (t.receiver, t.programmable),
    )


def deliver(
    tables: snn_fabric.types.RoutingTables,
    topology: Optional[snn_fabric.types.FabricTopology] = None,
    source: int = 0,
) -> set[int]:
    """Neurons that receive a spike emitted by `source`."""

    return {t.receiver for t in trace(tables, topology, source)}


def validate(
    placement: snn_fabric.types.PlacementResult,
    tables: snn_fabric.types.RoutingTables,
    net: snn_fabric.types.NetworkModel,
    topology: Optional[snn_fabric.types.FabricTopology] = None,
) -> snn_fabric.types.DeliveryReport:
    """Send a spike from every neuron and compare the receivers with the
    network. Placed and programmable connections are either covered or
    missing; receivers without a connection in the network are spurious.
    Unplaceable connections appear in neither list.

    Raises:
        InconsistentInputError:  If the three artifacts describe networks of
                                 different sizes."""

    sizes = {
        "network": net.neurons,
        "placement": len(placement.assignment.core_of),
        "tables": len(tables.neurons),
    }
    if len(set(sizes.values())) != 1:
        raise snn_fabric.errors.InconsistentInputError(
            "neuron counts differ: " +
            ", ".join(f"{k} {v}" for k, v in sizes.items())
        )
    if topology is None:
        topology = tables.topology

    edge_set = set(net.edges)
    realized: dict[int, list[int]] = {}
    for (s, d), _ in placement.placed:
        realized.setdefault(s, []).append(d)
    for s, d in placement.programmable:
        realized.setdefault(s, []).append(d)

    report = snn_fabric.types.DeliveryReport()
    for source in range(net.neurons):
        receivers = deliver(tables, topology, source)
        per_source = snn_fabric.types.SourceDelivery()
        for d in sorted(realized.get(source, [])):
            if d in receivers:
                report.covered.append((source, d))
                per_source.covered += 1
            else:
                report.missing.append((source, d))
                per_source.missing += 1
        for d in sorted(receivers):
            if (source, d) not in edge_set:
                report.spurious.append((source, d))
                per_source.spurious += 1
        report.per_source[source] = per_source

    logger.debug(f"validation: {report.summary}")
    return report
