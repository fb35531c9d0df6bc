from typing import Mapping, Optional, Sequence, Union
import logging
import math
import numpy as np
import numpy.typing as npt
import snn_fabric

logger = logging.getLogger(__name__)


def default_profile(
    num_populations: int,
    pop_size: int,
) -> snn_fabric.types.DecayProfile:
    """Connections halve with every step of population distance:
    `c(d) = ceil(pop_size / 2^d)`, e.g. `{1: 2, 2: 1, 3: 1}` for four
    populations of four neurons."""

    return snn_fabric.types.DecayProfile(
        per_distance_count={
            d: math.ceil(pop_size / 2**d)
            for d in range(1, num_populations)
        }
    )


def build_canonical(
    num_populations: int,
    pop_size: int,
    profile: Optional[snn_fabric.types.DecayProfile] = None,
    seed: int = 0,
) -> snn_fabric.types.NetworkModel:
    """Generate the canonical small-world network.

    Every population is all-to-all connected. Between populations `p` and `q`
    at distance `d = |p - q|` there are exactly `c(d)` edges in each
    direction. Edge `e` of the ordered pair starts at neuron
    `k = (seed + e) mod n` of `p` and ends at neuron `k + d` of `q` when
    `q > p`, or at neuron `k + 1 - d` when `q < p` (both shifted by
    `e div n` once all sources are used). Because forward and backward
    shifts sum to one, no two neurons of different populations are
    mutually connected for `n >= 2` as long as every `c(d) <= n`. Larger
    counts wrap around and do create mutual pairs.

    Args:
        num_populations:  Number of populations `P`.
        pop_size:         Neurons per population `n`.
        profile:          Inter-population connection counts. Defaults to
                          `default_profile(P, n)`.
        seed:             Start offset of the round-robin.

    Returns:  A network with `P * n` neurons, population labels and
              sign metadata (intra-population edges excitatory,
              inter-population edges inhibitory).

    Raises:
        ValueError:  If a count is given for a distance no population pair
                     has, or a count exceeds the `n * n` possible edges."""

    if num_populations < 1 or pop_size < 1:
        raise ValueError("num_populations and pop_size must be >= 1")
    if profile is None:
        profile = default_profile(num_populations, pop_size)
    for d, c in profile.per_distance_count.items():
        if c > 0 and d >= num_populations:
            raise ValueError(
                f"profile asks for c({d}) = {c} connections but no population pair has distance {d}"
            )
        if c > pop_size * pop_size:
            raise ValueError(
                f"profile asks for c({d}) = {c} connections but only {pop_size * pop_size} neuron pairs exist"
            )

    n = pop_size
    edges: set[tuple[int, int]] = set()
    signs: dict[str, str] = {}
    for p in range(num_populations):
        for i in range(n):
            for j in range(n):
                if i != j:
                    edges.add((p * n + i, p * n + j))
                    signs[f"{p * n + i}-{p * n + j}"] = "exc"

    for p in range(num_populations):
        for q in range(num_populations):
            if p == q:
                continue
            d = abs(p - q)
            shift = d if q > p else 1 - d
            for e in range(profile.count(d)):
                k = (seed + e) % n
                target = (k + shift + e // n) % n
                edges.add((p * n + k, q * n + target))
                signs[f"{p * n + k}-{q * n + target}"] = "inh"

    logger.debug(
        f"canonical network: {num_populations}x{pop_size} neurons, {len(edges)} edges"
    )
    return snn_fabric.types.NetworkModel(
        neurons=num_populations * n,
        edges=sorted(edges),
        populations=[
            list(range(p * n, (p + 1) * n)) for p in range(num_populations)
        ],
        signs=signs,
    )


def remove_neurons(
    net: snn_fabric.types.NetworkModel,
    victims: set[int],
) -> snn_fabric.types.NetworkModel:
    """Remove `victims` and all edges touching them; the remaining neurons are
    renumbered in order. Populations keep their index even when they become
    empty.

    Raises:
        UnknownNeuronError:  If a victim is not a neuron of `net`."""

    for v in sorted(victims):
        if v < 0 or v >= net.neurons:
            raise snn_fabric.errors.UnknownNeuronError(
                f"cannot remove unknown neuron {v} (network has {net.neurons})"
            )
    if len(victims) == 0:
        return net

    survivors = [i for i in range(net.neurons) if i not in victims]
    new_id = {old: new for new, old in enumerate(survivors)}
    old_labels = net.labels if net.labels is not None else [
        str(i) for i in range(net.neurons)
    ]

    edges = [(new_id[s], new_id[d]) for s, d in net.edges
             if s in new_id and d in new_id]
    populations: Optional[list[list[int]]] = None
    if net.populations is not None:
        populations = [[new_id[i] for i in p if i in new_id]
                       for p in net.populations]
    signs: Optional[dict[str, str]] = None
    if net.signs is not None:
        signs = {}
        for key, sign in net.signs.items():
            s, d = (int(x) for x in snn_fabric.types.parse_edge_key(key))
            if s in new_id and d in new_id:
                signs[f"{new_id[s]}-{new_id[d]}"] = sign

    return snn_fabric.types.NetworkModel(
        neurons=len(survivors),
        edges=edges,
        populations=populations,
        signs=signs,
        labels=[old_labels[i] for i in survivors],
    )


def adjacency_matrix(
    net: snn_fabric.types.NetworkModel,
) -> npt.NDArray[np.int8]:
    """`M[i][j] = 1` iff there is a connection from neuron `i` to neuron `j`."""

    m = np.zeros((net.neurons, net.neurons), dtype=np.int8)
    if len(net.edges) > 0:
        src, dst = zip(*net.edges)
        m[list(src), list(dst)] = 1
    return m


def inter_cluster_counts(
    net: snn_fabric.types.NetworkModel,
    grouping: Union[Mapping[int, int], Sequence[int]],
) -> npt.NDArray[np.int64]:
    """`C[a][b]` is the number of connections from cluster `a` into cluster
    `b`; the diagonal counts connections inside a cluster.

    Args:
        net:       The network.
        grouping:  Cluster id of every neuron, as a mapping or a sequence
                   indexed by neuron id.

    Raises:
        UnknownNeuronError:  If a neuron has no cluster."""

    cluster_of: dict[int, int] = (
        dict(grouping) if isinstance(grouping, Mapping) else
        dict(enumerate(grouping))
    )
    for i in range(net.neurons):
        if i not in cluster_of:
            raise snn_fabric.errors.UnknownNeuronError(
                f"neuron {i} is not assigned to a cluster"
            )
    size = (max(cluster_of.values()) + 1) if len(cluster_of) > 0 else 0
    counts = np.zeros((size, size), dtype=np.int64)
    for s, d in net.edges:
        counts[cluster_of[s], cluster_of[d]] += 1
    return counts
