from typing import Iterator, Optional
import concurrent.futures
import csv
import io
import itertools
import logging
import math
import numpy as np
import tum_esm_utils
import snn_fabric

logger = logging.getLogger(__name__)

# partition search grows exponentially beyond this
ORACLE_MAX_NEURONS = 16

CSV_HEADER = [
    "k", "core_size", "mean_extra_neurons", "mean_unplaceable", "samples"
]


def victim_sets(
    num_neurons: int,
    k: int,
    spec: snn_fabric.types.SweepSpec,
) -> list[tuple[int, ...]]:
    """Neuron sets removed for one `k`: every combination, or in sampling
    mode `spec.samples` distinct combinations drawn with `spec.seed`
    (every combination when there are fewer)."""

    if k < 0 or k >= num_neurons:
        raise ValueError(
            f"cannot remove {k} of {num_neurons} neurons, k must be in 0..{num_neurons - 1}"
        )
    total = math.comb(num_neurons, k)
    if spec.enumeration == "all" or spec.samples >= total:
        return list(itertools.combinations(range(num_neurons), k))

    rng = np.random.default_rng([spec.seed, k])
    drawn: set[tuple[int, ...]] = set()
    while len(drawn) < spec.samples:
        choice = rng.choice(num_neurons, size=k, replace=False)
        drawn.add(tuple(sorted(int(i) for i in choice)))
    return sorted(drawn)


def _evaluate(
    task: tuple[
        snn_fabric.types.NetworkModel,
        int,
        tuple[int, ...],
        list[snn_fabric.types.FabricConfig],
        bool,
    ],
) -> list[snn_fabric.types.SweepInstance]:
    base, k, victims, cfgs, with_oracle = task
    net = snn_fabric.netmodel.remove_neurons(base, set(victims))
    out: list[snn_fabric.types.SweepInstance] = []
    for cfg in cfgs:
        placement = snn_fabric.interfaces.FabricCompiler(cfg).compile(
            net, synthesize=False
        ).placement
        oracle_extra: Optional[int] = None
        if with_oracle:
            oracle_extra = exhaustive_oracle(net, cfg.core_size, cfg).extra_neurons
        out.append(
            snn_fabric.types.SweepInstance(
                k=k,
                core_size=cfg.core_size,
                victims=list(victims),
                extra_neurons=placement.extra_neurons,
                unplaceable=len(placement.unplaceable),
                oracle_extra=oracle_extra,
            )
        )
    return out


def deviation_sweep(
    base: snn_fabric.types.NetworkModel,
    spec: snn_fabric.types.SweepSpec,
    fabric: Optional[snn_fabric.types.FabricConfig] = None,
    workers: int = 1,
) -> snn_fabric.types.SweepResult:
    """Remove `k` neurons from `base` in every way (or a sample of ways),
    compile each deviation once per core size and average the extra
    hardware neurons and unplaceable connections.

    Args:
        base:     The unmodified network.
        spec:     Removal counts, core sizes, enumeration mode and whether
                  to run the exhaustive oracle on every instance.
        fabric:   Template fabric; only its core size is replaced.
        workers:  Number of worker processes, `1` runs in-process.

    Returns:  Aggregates ordered by `(k, core_size)`, the raw instances
              and, in oracle mode, the histogram of heuristic minus oracle
              extra neurons.

    Raises:
        ValueError:  If a `k` is not smaller than the number of neurons."""

    template = fabric if fabric is not None else snn_fabric.types.FabricConfig()
    cfgs = [
        snn_fabric.interfaces.with_core_size(template, size)
        for size in sorted(set(spec.core_sizes))
    ]
    tasks = [(base, k, victims, cfgs, spec.with_oracle)
             for k in sorted(set(spec.removals))
             for victims in victim_sets(base.neurons, k, spec)]
    logger.info(
        f"sweeping {len(tasks)} deviations over core sizes {[c.core_size for c in cfgs]}"
    )

    instances: list[snn_fabric.types.SweepInstance] = []
    if workers > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(
                _evaluate, tasks, chunksize=max(1, len(tasks) // (4 * workers))
            ):
                instances.extend(chunk)
    else:
        for task in tasks:
            instances.extend(_evaluate(task))
    instances.sort(key=lambda i: (i.k, i.core_size, i.victims))

    totals: dict[tuple[int, int], list[int]] = {}
    for i in instances:
        t = totals.setdefault((i.k, i.core_size), [0, 0, 0])
        t[0] += 1
        t[1] += i.extra_neurons
        t[2] += i.unplaceable
    aggregates = [
        snn_fabric.types.SweepAggregate(
            k=k,
            core_size=size,
            samples=t[0],
            total_extra=t[1],
            total_unplaceable=t[2],
        ) for (k, size), t in sorted(totals.items())
    ]

    gap_histogram: dict[int, int] = {}
    for i in instances:
        if i.oracle_extra is not None:
            gap = i.extra_neurons - i.oracle_extra
            gap_histogram[gap] = gap_histogram.get(gap, 0) + 1

    return snn_fabric.types.SweepResult(
        spec=spec,
        aggregates=aggregates,
        instances=instances,
        gap_histogram=dict(sorted(gap_histogram.items())),
    )


def _cliques_with(
    v: int,
    candidates: list[int],
    adjacency: dict[int, set[int]],
    cap: int,
) -> Iterator[list[int]]:
    """Every clique of at most `cap` neurons that contains `v` and otherwise
    only neurons from `candidates`, largest first."""

    found: list[list[int]] = []

    def extend(clique: list[int], rest: list[int]) -> None:
        found.append(clique)
        if len(clique) >= cap:
            return
        for idx, u in enumerate(rest):
            extend(clique + [u], [w for w in rest[idx + 1 :] if w in adjacency[u]])

    extend([v], [u for u in candidates if u in adjacency[v]])
    found.sort(key=lambda c: (-len(c), c))
    yield from found


def _clique_partitions(
    neurons: list[int],
    adjacency: dict[int, set[int]],
    cap: int,
    max_blocks: Optional[int],
) -> Iterator[list[list[int]]]:
    """Partitions of `neurons` into cliques of at most `cap` members, with at
    most `max_blocks` blocks when given."""

    def recurse(rest: list[int],
                blocks: list[list[int]]) -> Iterator[list[list[int]]]:
        if len(rest) == 0:
            yield list(blocks)
            return
        if max_blocks is not None and len(blocks) + math.ceil(
            len(rest) / cap
        ) > max_blocks:
            return
        v, others = rest[0], rest[1 :]
        for clique in _cliques_with(v, others, adjacency, cap):
            members = set(clique)
            yield from recurse([u for u in rest if u not in members],
                               blocks + [clique])

    yield from recurse(sorted(neurons), [])


def exhaustive_oracle(
    net: snn_fabric.types.NetworkModel,
    core_size: int,
    fabric: Optional[snn_fabric.types.FabricConfig] = None,
) -> snn_fabric.types.OracleResult:
    """Brute-force the best core assignment of a small network.

    First finds the smallest number of cores any clique partition needs
    (so the fewest extra hardware neurons), then among all partitions of
    that size the one with the fewest unplaceable connections under the
    regular connection placement.

    Raises:
        OracleSizeError:      If the network has more than 16 neurons; use
                              the heuristic for those.
        FabricTooSmallError:  If no minimum partition fits the fabric."""

    if net.neurons > ORACLE_MAX_NEURONS:
        raise snn_fabric.errors.OracleSizeError(
            f"the exhaustive oracle handles at most {ORACLE_MAX_NEURONS} neurons, " +
            f"got {net.neurons}; use the placement heuristic instead"
        )
    cfg = snn_fabric.interfaces.with_core_size(
        fabric if fabric is not None else snn_fabric.types.FabricConfig(),
        core_size,
    )
    g = snn_fabric.placer.support_graph(net)
    adjacency = {v: set(g.neighbors(v)) for v in g.nodes}
    neurons = list(range(net.neurons))

    # phase 1: fewest cores
    best_cores = net.neurons
    while best_cores > math.ceil(net.neurons / core_size):
        try:
            next(_clique_partitions(neurons, adjacency, core_size, best_cores - 1))
        except StopIteration:
            break
        best_cores -= 1

    # phase 2: fewest unplaceable connections among those
    best: Optional[tuple[int, list[list[int]]]] = None
    evaluated = 0
    last_error: Optional[snn_fabric.errors.FabricTooSmallError] = None
    for partition in _clique_partitions(neurons, adjacency, core_size, best_cores):
        if len(partition) != best_cores:
            continue
        evaluated += 1
        assignment = snn_fabric.placer.assignment_from_cores(partition, core_size)
        try:
            placement, _ = snn_fabric.placer.compile_placement(net, cfg, assignment)
        except snn_fabric.errors.FabricTooSmallError as e:
            last_error = e
            continue
        unplaceable = len(placement.unplaceable)
        if best is None or unplaceable < best[0]:
            best = (unplaceable, partition)
            if unplaceable == 0:
                break

    if best is None:
        if last_error is not None:
            raise last_error
        best = (0, [])

    return snn_fabric.types.OracleResult(
        core_size=core_size,
        num_cores=best_cores,
        extra_neurons=best_cores * core_size - net.neurons,
        unplaceable=best[0],
        partition=best[1],
        partitions_evaluated=evaluated,
    )


def emit_csv(result: snn_fabric.types.SweepResult, path: str) -> None:
    """Write one row per `(k, core_size)` with means rendered to six
    significant digits; an empty sweep writes only the header."""

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for a in sorted(result.aggregates, key=lambda a: (a.k, a.core_size)):
        writer.writerow({
            "k": a.k,
            "core_size": a.core_size,
            "mean_extra_neurons": f"{float(a.mean_extra):.6g}",
            "mean_unplaceable": f"{float(a.mean_unplaceable):.6g}",
            "samples": a.samples,
        })
    tum_esm_utils.files.dump_file(path, buffer.getvalue())


def emit_json(result: snn_fabric.types.SweepResult, path: str) -> None:
    tum_esm_utils.files.dump_file(path, result.model_dump_json(indent=2) + "\n")
