from typing import Iterable, Literal, Optional, Union
import logging
import networkx as nx
import snn_fabric

logger = logging.getLogger(__name__)

# above this many neurons, cliques are grown greedily instead of searched
EXACT_CLIQUE_LIMIT = 64


def support_graph(net: snn_fabric.types.NetworkModel) -> "nx.Graph[int]":
    """Undirected graph over all neurons with an edge wherever the network
    connects two neurons in both directions. Only such pairs can share a
    core, because the crossbar of a core connects every member to every
    other member."""

    edge_set = set(net.edges)
    g: "nx.Graph[int]" = nx.Graph()
    g.add_nodes_from(range(net.neurons))
    g.add_edges_from((s, d) for s, d in net.edges if s < d and (d, s) in edge_set)
    return g


def _exact_max_clique(
    adjacency: dict[int, set[int]],
    nodes: list[int],
    cap: int,
) -> list[int]:
    """Branch and bound over ascending neuron ids. The first clique found of
    every size is kept, so the result is the lexicographically smallest
    maximum clique (capped at `cap` members)."""

    best: list[int] = []

    def expand(clique: list[int], candidates: list[int]) -> bool:
        nonlocal best
        if len(clique) > len(best):
            best = clique
            if len(best) >= cap:
                return True
        for idx, v in enumerate(candidates):
            if len(clique) + len(candidates) - idx <= len(best):
                return False
            if expand(
                clique + [v],
                [u for u in candidates[idx + 1 :] if u in adjacency[v]],
            ):
                return True
        return False

    expand([], sorted(nodes))
    return best


def _greedy_clique(g: "nx.Graph[int]", cap: int) -> list[int]:
    core_number: dict[int, int] = nx.core_number(g)
    order = sorted(g.nodes, key=lambda v: (-core_number[v], v))
    clique: list[int] = []
    for v in order:
        if all(g.has_edge(v, u) for u in clique):
            clique.append(v)
            if len(clique) >= cap:
                break
    return sorted(clique)


def max_clique(g: "nx.Graph[int]", cap: int) -> list[int]:
    """Largest clique of `g` with at most `cap` members, sorted by id."""

    if g.number_of_nodes() == 0:
        return []
    if g.number_of_nodes() <= EXACT_CLIQUE_LIMIT:
        adjacency = {v: set(g.neighbors(v)) for v in g.nodes}
        return _exact_max_clique(adjacency, list(g.nodes), cap)
    return _greedy_clique(g, cap)


def assignment_from_cores(
    cores: Iterable[Iterable[int]],
    core_size: int,
) -> snn_fabric.types.CoreAssignment:
    """Build a CoreAssignment from explicit core member lists; slots follow
    ascending neuron id inside each core."""

    members = [sorted(c) for c in cores]
    num_neurons = sum(len(c) for c in members)
    core_of = [0] * num_neurons
    slot_of = [0] * num_neurons
    for core, neurons in enumerate(members):
        for slot, neuron in enumerate(neurons):
            core_of[neuron] = core
            slot_of[neuron] = slot
    return snn_fabric.types.CoreAssignment(
        core_size=core_size,
        num_cores=len(members),
        core_of=core_of,
        slot_of=slot_of,
    )


def assign_cores(
    net: snn_fabric.types.NetworkModel,
    core_size: int,
) -> snn_fabric.types.CoreAssignment:
    """Place neurons into cores by repeatedly extracting a maximum clique of
    the support graph, capped at `core_size`.

    Cores are numbered in extraction order. Partially filled cores are merged
    afterwards when their union is still a clique and fits into one core."""

    if core_size < 1:
        raise ValueError(f"core size must be >= 1, not {core_size}")

    g = support_graph(net)
    remaining = set(range(net.neurons))
    cores: list[list[int]] = []
    while len(remaining) > 0:
        clique = max_clique(g.subgraph(remaining), core_size)
        cores.append(clique)
        remaining.difference_update(clique)

    merged = True
    while merged:
        merged = False
        for a in range(len(cores)):
            if len(cores[a]) >= core_size:
                continue
            for b in range(a + 1, len(cores)):
                union = cores[a] + cores[b]
                if len(union) <= core_size and all(
                    g.has_edge(u, v) for u in cores[a] for v in cores[b]
                ):
                    cores[a] = sorted(union)
                    del cores[b]
                    merged = True
                    break
            if merged:
                break

    assignment = assignment_from_cores(cores, core_size)
    logger.debug(
        f"assigned {net.neurons} neurons to {assignment.num_cores} cores of size {core_size}"
    )
    return assignment


def compute_distance_map(
    net: snn_fabric.types.NetworkModel,
    assignment: snn_fabric.types.CoreAssignment,
) -> snn_fabric.types.DistanceMap:
    """`dist[i][j] = n div e(i, j) + 1` where `e(i, j)` counts the
    connections core `i` receives from core `j`; `0` on the diagonal and
    `-1` for core pairs without connections."""

    num_cores = assignment.num_cores
    n = assignment.core_size
    counts = snn_fabric.netmodel.inter_cluster_counts(net, assignment.core_of)
    dist = [[0] * num_cores for _ in range(num_cores)]
    for i in range(num_cores):
        for j in range(num_cores):
            if i == j:
                continue
            e = int(counts[j][i]) if j < counts.shape[0] and i < counts.shape[1] else 0
            dist[i][j] = (n // e + 1) if e > 0 else -1
    return snn_fabric.types.DistanceMap(n=n, dist=dist)


def _predecessors(net: snn_fabric.types.NetworkModel) -> list[set[int]]:
    out: list[set[int]] = [set() for _ in range(net.neurons)]
    for s, d in net.edges:
        out[d].add(s)
    return out


def _edges_by_core_pair(
    net: snn_fabric.types.NetworkModel,
    core_of: list[int],
) -> dict[tuple[int, int], list[snn_fabric.types.Edge]]:
    """Edges keyed by `(receiving core, sending core)`, sorted."""

    out: dict[tuple[int, int], list[snn_fabric.types.Edge]] = {}
    for s, t in net.edges:
        out.setdefault((core_of[t], core_of[s]), []).append((s, t))
    return {k: sorted(v) for k, v in out.items()}


def _closest_pairs(
    dm: snn_fabric.types.DistanceMap,
    cores: Iterable[int],
) -> list[tuple[int, int]]:
    """Connected `(i, j)` pairs among `cores` (diagonal included) ordered by
    `(dist, i, j)`."""

    cores = list(cores)
    return sorted(
        ((i, j) for i in cores for j in cores if dm.dist[i][j] >= 0),
        key=lambda p: (dm.dist[p[0]][p[1]], p[0], p[1]),
    )


class _ListenRows:
    """Listen rows, fan-in and programmable synapses handed out while
    connections between cores are placed."""

    def __init__(
        self,
        assignment: snn_fabric.types.CoreAssignment,
        cfg: snn_fabric.types.FabricConfig,
        predecessors: list[set[int]],
    ) -> None:
        num_neurons = len(assignment.core_of)
        self.assignment = assignment
        self.cfg = cfg
        self.predecessors = predecessors
        self.budget = cfg.effective_fanin_budget
        self.rows: dict[str, list[list[int]]] = {
            "R1": [[0] * cfg.r1_rows for _ in range(num_neurons)],
            "R2": [[0] * cfg.r2_rows for _ in range(num_neurons)],
        }
        self.fanin_used = [0] * num_neurons
        self.pool = [cfg.programmable_per_core] * assignment.num_cores
        self.disposition: dict[snn_fabric.types.Edge, snn_fabric.types.Disposition] = {}

    def place(
        self,
        s: int,
        t: int,
        level: Literal["R1", "R2"],
        cores: list[int],
    ) -> snn_fabric.types.Disposition:
        """Serve `s -> t` at `level`, where `cores` is what `t` hears at that
        level in row order.

        A row already holding the sender's selector serves the edge for
        free. A free row is set if the selector fits its width, every neuron
        the row would hear is a predecessor of `t` and the fan-in budget
        covers them all. Otherwise a programmable synapse of the receiving
        core is used, and once those are gone the edge is unplaceable."""

        a = self.assignment
        num_rows, width = snn_fabric.fabric.row_geometry(self.cfg, level)
        r = cores.index(a.core_of[s]) % num_rows
        value = snn_fabric.fabric.row_selector(a.slot_of[s], a.core_size, num_rows)
        row = self.rows[level][t]

        result: snn_fabric.types.Disposition = "unplaceable"
        if row[r] == value:
            result = level
        elif row[r] == 0 and value < (1 << width):
            sources = snn_fabric.fabric.row_sources(a, cores, r, value, num_rows)
            if (set(sources).issubset(self.predecessors[t]) and
                    self.fanin_used[t] + len(sources) <= self.budget):
                row[r] = value
                self.fanin_used[t] += len(sources)
                result = level
                for other in sources:
                    if self.disposition.get((other, t)) == "unplaceable":
                        self.disposition[(other, t)] = level
        if result == "unplaceable" and self.pool[a.core_of[t]] > 0:
            self.pool[a.core_of[t]] -= 1
            result = "programmable"

        self.disposition[(s, t)] = result
        return result


def _shares_r1(
    net: snn_fabric.types.NetworkModel,
    assignment: snn_fabric.types.CoreAssignment,
    dm: snn_fabric.types.DistanceMap,
    cfg: snn_fabric.types.FabricConfig,
    cluster: list[int],
) -> bool:
    """Whether the cores of `cluster` (sorted) can sit below one R1 router
    without leaving a connection between them unplaceable. Connections the
    R1 rows cannot express may use programmable synapses."""

    state = _ListenRows(assignment, cfg, _predecessors(net))
    edges_by_pair = _edges_by_core_pair(net, assignment.core_of)
    groups = [[c] for c in cluster]
    for i, j in _closest_pairs(dm, cluster):
        if i == j:
            continue
        cores = snn_fabric.fabric.listen_order(groups, cluster.index(i))
        for s, t in edges_by_pair.get((i, j), []):
            state.place(s, t, "R1", cores)
    return "unplaceable" not in state.disposition.values()


def group_cores(
    net: snn_fabric.types.NetworkModel,
    assignment: snn_fabric.types.CoreAssignment,
    dm: snn_fabric.types.DistanceMap,
    cfg: snn_fabric.types.FabricConfig,
) -> snn_fabric.types.CoreGrouping:
    """Group cores into R1 clusters, closest core pairs first.

    Two clusters merge when the union fits below one R1 router and every
    connection inside the union can still be served there, by R1 rows or by
    programmable synapses. Merges are never undone. If more clusters remain
    than the R2 router can hold, the two smallest clusters that still fit
    are merged until the tree fits.

    Raises:
        FabricTooSmallError:  If the cores cannot be packed into
                              `r1_per_r2` clusters."""

    if assignment.num_cores > cfg.max_cores:
        raise snn_fabric.errors.FabricTooSmallError(
            "cores", assignment.num_cores, cfg.max_cores
        )

    clusters: list[list[int]] = [[c] for c in range(assignment.num_cores)]

    def find(core: int) -> int:
        return next(x for x, cluster in enumerate(clusters) if core in cluster)

    for i, j in _closest_pairs(dm, range(assignment.num_cores)):
        a, b = find(i), find(j)
        if a == b:
            continue
        union = sorted(clusters[a] + clusters[b])
        if len(union) > cfg.cores_per_r1:
            continue
        if not _shares_r1(net, assignment, dm, cfg, union):
            continue
        clusters[min(a, b)] = union
        del clusters[max(a, b)]

    while len(clusters) > cfg.r1_per_r2:
        candidates = sorted(
            ((len(clusters[a]) + len(clusters[b]), min(clusters[a] + clusters[b]), a, b)
             for a in range(len(clusters))
             for b in range(a + 1, len(clusters))
             if len(clusters[a]) + len(clusters[b]) <= cfg.cores_per_r1),
        )
        if len(candidates) == 0:
            raise snn_fabric.errors.FabricTooSmallError(
                "R1 routers", len(clusters), cfg.r1_per_r2
            )
        _, _, a, b = candidates[0]
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]

    clusters.sort(key=min)
    logger.debug(f"grouped {assignment.num_cores} cores into R1 clusters {clusters}")
    return snn_fabric.types.CoreGrouping(clusters=clusters)


def required_depth(
    dm: snn_fabric.types.DistanceMap,
    grouping: snn_fabric.types.CoreGrouping,
) -> int:
    """Highest router level any connection between two cores has to climb:
    0 without inter-core connections, 1 if every connected core pair shares
    an R1 cluster, 2 otherwise."""

    pairs = dm.connected_pairs
    if len(pairs) == 0:
        return 0
    cluster_of = grouping.cluster_of
    if all(cluster_of[i] == cluster_of[j] for i, j in pairs):
        return 1
    return 2


def place_connections(
    net: snn_fabric.types.NetworkModel,
    assignment: snn_fabric.types.CoreAssignment,
    dm: snn_fabric.types.DistanceMap,
    fabric: Union[snn_fabric.types.FabricConfig, snn_fabric.types.FabricTopology],
) -> snn_fabric.types.PlacementResult:
    """Assign every connection to a router level, closest core pairs first.

    Core pairs are visited by `(dist, receiving core, sending core)`, the
    diagonal first. Connections inside a core use the crossbar for free.
    Connections between cores set a listen row of the receiving neuron at R1
    (same R1 cluster) or R2; setting a row charges one fan-in unit per neuron
    the row listens to. When the row cannot express the connection or the
    fan-in budget is spent, a programmable synapse of the receiving core is
    used, and once those are gone the connection is flagged unplaceable.

    Args:
        net:         The network.
        assignment:  Core assignment of its neurons.
        dm:          Distance map of the assignment.
        fabric:      Either a topology whose R1 clusters are used as they
                     are, or a fabric config from which the clusters are
                     derived with `group_cores`.

    Returns:  A PlacementResult whose dispositions partition the edges."""

    if isinstance(fabric, snn_fabric.types.FabricTopology):
        topology = fabric
    else:
        grouping = group_cores(net, assignment, dm, fabric)
        topology = snn_fabric.fabric.build_fabric(
            fabric, assignment.num_cores, grouping.clusters
        )
    cfg = topology.config
    if cfg.core_size != assignment.core_size:
        raise ValueError(
            f"fabric core size {cfg.core_size} differs from the assignment's {assignment.core_size}"
        )
    depth = required_depth(
        dm, snn_fabric.types.CoreGrouping(clusters=topology.clusters)
    )

    members = assignment.cores
    cluster_of = topology.core_cluster
    edges_by_pair = _edges_by_core_pair(net, assignment.core_of)
    state = _ListenRows(assignment, cfg, _predecessors(net))
    r0 = [0] * net.neurons

    for i, j in _closest_pairs(dm, range(assignment.num_cores)):
        if i == j:
            for s, t in edges_by_pair.get((i, j), []):
                r0[s] = 1
                r0[t] = 1
                state.disposition[(s, t)] = "R0"
            continue
        level: Literal["R1", "R2"] = "R1" if cluster_of[i] == cluster_of[j] else "R2"
        cores = snn_fabric.fabric.listen_cores(topology, level, i)
        for s, t in edges_by_pair.get((i, j), []):
            state.place(s, t, level, cores)

    edge_set = set(net.edges)
    spurious = sorted((a, b) for core in members for a in core for b in core
                      if a != b and r0[a] == 1 and r0[b] == 1 and
                      (a, b) not in edge_set)

    result = snn_fabric.types.PlacementResult(
        assignment=assignment,
        depth=depth,
        clusters=topology.clusters,
        dispositions=[
            snn_fabric.types.EdgeDisposition(
                src=s, dst=t, disposition=state.disposition[(s, t)]
            ) for s, t in net.edges
        ],
        fanin_used=state.fanin_used,
        extra_neurons=extra_hardware_neurons(assignment),
        spurious_in_core=spurious,
    )
    unplaceable = result.unplaceable
    if len(unplaceable) > 0:
        logger.warning(f"{len(unplaceable)} connections are unplaceable")
    logger.debug(f"placement metrics: {result.metrics.placed}, depth {depth}")
    return result


def extra_hardware_neurons(assignment: snn_fabric.types.CoreAssignment) -> int:
    return assignment.extra_neurons


def compile_placement(
    net: snn_fabric.types.NetworkModel,
    cfg: snn_fabric.types.FabricConfig,
    assignment: Optional[snn_fabric.types.CoreAssignment] = None,
) -> tuple[snn_fabric.types.PlacementResult, snn_fabric.types.FabricTopology]:
    """Run the placement steps end to end and return the placement together
    with the topology it was placed on."""

    if assignment is None:
        assignment = assign_cores(net, cfg.core_size)
    dm = compute_distance_map(net, assignment)
    grouping = group_cores(net, assignment, dm, cfg)
    topology = snn_fabric.fabric.build_fabric(
        cfg, assignment.num_cores, grouping.clusters
    )
    return place_connections(net, assignment, dm, topology), topology
