from __future__ import annotations
from typing import Any, Literal, Optional
import fractions
import re
import numpy as np
import numpy.typing as npt
import pydantic

RouterLevel = Literal["R0", "R1", "R2"]
Disposition = Literal["R0", "R1", "R2", "programmable", "unplaceable"]
EdgeSign = Literal["exc", "inh"]
Edge = tuple[int, int]


def parse_edge_key(key: str) -> tuple[str, str]:
    """Split a `"src-dst"` sign key into its two endpoint labels."""

    src, sep, dst = key.partition("-")
    if sep == "" or src == "" or dst == "":
        raise ValueError(f"sign key {key!r} must look like 'src-dst'")
    return src, dst


def encode_row(value: int, width: int) -> str:
    """Render a row value as a little-endian bit string of `width` bits."""

    if value < 0 or value >= (1 << width):
        raise ValueError(f"row value {value} does not fit into {width} bits")
    return "".join(str((value >> i) & 1) for i in range(width))


def decode_row(bits: str) -> int:
    return sum(1 << i for i, b in enumerate(bits) if b == "1")


class RunManifest(pydantic.BaseModel):
    """Provenance block embedded in every artifact written by the CLI."""

    model_config = pydantic.ConfigDict(frozen=True)

    tool_version: str
    input_digests: dict[str, str] = pydantic.Field(
        default_factory=dict,
        description="sha256 digest of every input file, keyed by file name",
    )
    fabric: Optional[FabricConfig] = None
    timestamp: Optional[str] = None


# --- network model -----------------------------------------------------------


class DecayProfile(pydantic.BaseModel):
    """Connections per ordered population pair and direction, by distance."""

    model_config = pydantic.ConfigDict(frozen=True)

    per_distance_count: dict[int, int]

    @pydantic.field_validator("per_distance_count")
    def check_decay(cls, v: dict[int, int]) -> dict[int, int]:
        for d, c in v.items():
            if d < 1:
                raise ValueError(f"distance {d} must be >= 1")
            if c < 0:
                raise ValueError(f"count c({d}) = {c} must be >= 0")
        if len(v) > 0:
            counts = [v.get(d, 0) for d in range(1, max(v.keys()) + 1)]
            for d, (c1, c2) in enumerate(zip(counts[:-1], counts[1 :])):
                if c2 > c1:
                    raise ValueError(
                        f"counts must not increase with distance: c({d + 1}) = {c1} < c({d + 2}) = {c2}"
                    )
        return dict(sorted(v.items()))

    def count(self, distance: int) -> int:
        return self.per_distance_count.get(distance, 0)


class NetworkModel(pydantic.BaseModel):
    """Directed neuron graph, the input of the compiler.

    Neuron ids are the dense integers `0..neurons-1`. When a file lists
    `neurons` as labels instead of a count, the labels are mapped onto ids in
    order of appearance and kept in `labels`."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    neurons: int = pydantic.Field(..., ge=0)
    edges: list[Edge] = pydantic.Field(default_factory=list)
    populations: Optional[list[list[int]]] = None
    signs: Optional[dict[str, EdgeSign]] = pydantic.Field(
        None,
        description="edge sign metadata keyed by 'src-dst', never consulted by placement",
    )
    labels: Optional[list[str]] = None
    manifest: Optional[RunManifest] = None

    @pydantic.model_validator(mode="before")
    @classmethod
    def normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)

        if isinstance(data.get("neurons"), list):
            labels = [str(label) for label in data["neurons"]]
            if len(set(labels)) != len(labels):
                raise ValueError("neuron labels are not unique")
            index = {label: i for i, label in enumerate(labels)}

            def resolve(label: Any) -> int:
                if str(label) not in index:
                    raise ValueError(f"unknown neuron {label!r}")
                return index[str(label)]

            data["neurons"] = len(labels)
            data["labels"] = labels
            data["edges"] = [(resolve(s), resolve(d))
                             for s, d in data.get("edges", [])]
            if data.get("populations") is not None:
                data["populations"] = [[resolve(i) for i in p]
                                       for p in data["populations"]]
            if data.get("signs") is not None:
                data["signs"] = {
                    "-".join(str(resolve(x)) for x in parse_edge_key(k)): v
                    for k, v in data["signs"].items()
                }

        if data.get("edges") is not None:
            data["edges"] = sorted({(int(s), int(d)) for s, d in data["edges"]})
        if data.get("populations") is not None:
            data["populations"] = [
                sorted(int(i) for i in p) for p in data["populations"]
            ]
        if data.get("signs") is not None:
            keyed = {
                tuple(int(x) for x in parse_edge_key(k)): v
                for k, v in data["signs"].items()
            }
            data["signs"] = {
                f"{s}-{d}": keyed[(s, d)]
                for s, d in sorted(keyed.keys())
            }
        return data

    @pydantic.model_validator(mode="after")
    def check_integrity(self) -> NetworkModel:
        for s, d in self.edges:
            if s == d:
                raise ValueError(f"self connection on neuron {s}")
            for i in (s, d):
                if i < 0 or i >= self.neurons:
                    raise ValueError(
                        f"edge {s}->{d} references undeclared neuron {i}"
                    )
        if self.populations is not None:
            seen: set[int] = set()
            for p, members in enumerate(self.populations):
                for i in members:
                    if i < 0 or i >= self.neurons:
                        raise ValueError(
                            f"population {p} references undeclared neuron {i}"
                        )
                    if i in seen:
                        raise ValueError(
                            f"neuron {i} is listed in more than one population"
                        )
                    seen.add(i)
        if self.signs is not None:
            edge_set = set(self.edges)
            for k in self.signs.keys():
                ks, kd = parse_edge_key(k)
                if (int(ks), int(kd)) not in edge_set:
                    raise ValueError(f"sign given for unknown edge {k}")
        if self.labels is not None and len(self.labels) != self.neurons:
            raise ValueError(
                f"{len(self.labels)} labels given for {self.neurons} neurons"
            )
        return self

    @property
    def neuron_ids(self) -> list[int]:
        return list(range(self.neurons))

    @property
    def population_of(self) -> Optional[dict[int, int]]:
        if self.populations is None:
            return None
        return {i: p for p, members in enumerate(self.populations) for i in members}

    def out_degrees(self) -> list[int]:
        degrees = [0] * self.neurons
        for s, _ in self.edges:
            degrees[s] += 1
        return degrees

    def in_degrees(self) -> list[int]:
        degrees = [0] * self.neurons
        for _, d in self.edges:
            degrees[d] += 1
        return degrees


# --- fabric configuration ----------------------------------------------------


class FabricConfig(pydantic.BaseModel):
    """Parameterized hardware target. Every field is optional in a fabric
    file; the defaults describe 16 cores of four neurons under one R2 router
    with two one-bit R1 rows and four two-bit R2 rows per neuron."""

    model_config = pydantic.ConfigDict(frozen=True, extra="forbid")

    core_size: int = pydantic.Field(
        4, ge=1, description="neurons per core"
    )
    cores_per_r1: int = pydantic.Field(
        4, ge=1, description="cores below one R1 router"
    )
    r1_per_r2: int = pydantic.Field(
        4, ge=1, description="R1 routers below the R2 router"
    )
    fanin_budget: Optional[int] = pydantic.Field(
        None,
        ge=0,
        description=
        "inter-core synapses per neuron, if not set, using the fan-in capacity",
    )
    programmable_per_core: int = pydantic.Field(
        2,
        ge=0,
        description="fully programmable synapses per core",
    )
    r1_rows: int = pydantic.Field(2, ge=1)
    r1_row_bits: int = pydantic.Field(1, ge=1)
    r2_rows: int = pydantic.Field(4, ge=1)
    r2_row_bits: int = pydantic.Field(2, ge=1)

    @property
    def fanin_capacity(self) -> int:
        return ((self.core_size - 1) +
                (self.cores_per_r1 - 1) * self.core_size // 2 +
                (self.r1_per_r2 - 1) * self.cores_per_r1 * self.core_size // 4)

    @property
    def effective_fanin_budget(self) -> int:
        if self.fanin_budget is None:
            return self.fanin_capacity
        return self.fanin_budget

    @property
    def max_cores(self) -> int:
        return self.cores_per_r1 * self.r1_per_r2

    @pydantic.model_validator(mode="after")
    def check_budget(self) -> FabricConfig:
        if self.fanin_budget is not None and self.fanin_budget > self.fanin_capacity:
            raise ValueError(
                f"fanin_budget ({self.fanin_budget}) exceeds the fan-in capacity of the fabric ({self.fanin_capacity})"
            )
        return self


# --- placement ---------------------------------------------------------------


class CoreAssignment(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    core_size: int = pydantic.Field(..., ge=1)
    num_cores: int = pydantic.Field(..., ge=0)
    core_of: list[int]
    slot_of: list[int]

    @pydantic.model_validator(mode="after")
    def check_slots(self) -> CoreAssignment:
        if len(self.core_of) != len(self.slot_of):
            raise ValueError("core_of and slot_of differ in length")
        occupied: set[tuple[int, int]] = set()
        for neuron, (core, slot) in enumerate(zip(self.core_of, self.slot_of)):
            if core < 0 or core >= self.num_cores:
                raise ValueError(f"neuron {neuron} assigned to unknown core {core}")
            if slot < 0 or slot >= self.core_size:
                raise ValueError(
                    f"neuron {neuron} has slot {slot} outside 0..{self.core_size - 1}"
                )
            if (core, slot) in occupied:
                raise ValueError(f"slot {slot} of core {core} is used twice")
            occupied.add((core, slot))
        return self

    @property
    def cores(self) -> list[list[int]]:
        """Neurons of every core, ordered by slot."""
        out: list[list[int]] = [[] for _ in range(self.num_cores)]
        for neuron in sorted(
            range(len(self.core_of)), key=lambda i: self.slot_of[i]
        ):
            out[self.core_of[neuron]].append(neuron)
        return out

    @property
    def extra_neurons(self) -> int:
        return self.num_cores * self.core_size - len(self.core_of)


class DistanceMap(pydantic.BaseModel):
    """Inter-core quasi-metric: `dist[i][j]` is the distance of core `i` from
    the cores it receives from, `-1` where core `i` receives nothing from `j`."""

    model_config = pydantic.ConfigDict(frozen=True)

    n: int = pydantic.Field(..., ge=1)
    dist: list[list[int]]

    @pydantic.model_validator(mode="after")
    def check_matrix(self) -> DistanceMap:
        for i, row in enumerate(self.dist):
            if len(row) != len(self.dist):
                raise ValueError("distance matrix is not square")
            if row[i] != 0:
                raise ValueError(f"dist[{i}][{i}] must be 0")
            if any(v < -1 for v in row):
                raise ValueError(f"row {i} contains values below -1")
        return self

    @property
    def matrix(self) -> npt.NDArray[np.int64]:
        return np.array(self.dist, dtype=np.int64).reshape(
            len(self.dist), len(self.dist)
        )

    @property
    def connected_pairs(self) -> list[tuple[int, int]]:
        """Ordered core pairs `(i, j)`, `i != j`, where `i` receives from `j`."""
        return [(i, j) for i, row in enumerate(self.dist)
                for j, v in enumerate(row) if i != j and v > 0]


class CoreGrouping(pydantic.BaseModel):
    """Cores grouped into R1 clusters, clusters ordered by their lowest core."""

    model_config = pydantic.ConfigDict(frozen=True)

    clusters: list[list[int]]

    @property
    def cluster_of(self) -> dict[int, int]:
        return {c: x for x, cores in enumerate(self.clusters) for c in cores}


class FabricTopology(pydantic.BaseModel):
    """Router tree of one R2 router, R1 routers below it and cores below those."""

    model_config = pydantic.ConfigDict(frozen=True)

    config: FabricConfig
    clusters: list[list[int]]

    @pydantic.model_validator(mode="after")
    def check_tree(self) -> FabricTopology:
        if len(self.clusters) > self.config.r1_per_r2:
            raise ValueError(
                f"{len(self.clusters)} R1 routers do not fit below one R2 router with r1_per_r2={self.config.r1_per_r2}"
            )
        cores = sorted(c for cluster in self.clusters for c in cluster)
        if cores != list(range(len(cores))):
            raise ValueError("every core must appear in exactly one R1 cluster")
        for x, cluster in enumerate(self.clusters):
            if len(cluster) == 0 or len(cluster) > self.config.cores_per_r1:
                raise ValueError(
                    f"R1 cluster {x} holds {len(cluster)} cores, allowed 1..{self.config.cores_per_r1}"
                )
        return self

    @property
    def num_cores(self) -> int:
        return sum(len(c) for c in self.clusters)

    @property
    def core_cluster(self) -> list[int]:
        out = [0] * self.num_cores
        for x, cluster in enumerate(self.clusters):
            for c in cluster:
                out[c] = x
        return out

    @property
    def core_position(self) -> list[int]:
        out = [0] * self.num_cores
        for cluster in self.clusters:
            for p, c in enumerate(cluster):
                out[c] = p
        return out

    def core_offset(self, src_core: int, dst_core: int) -> int:
        """Relative position of `src_core` seen from `dst_core` inside their
        shared R1 cluster."""
        x = self.core_cluster[dst_core]
        assert self.core_cluster[src_core] == x, "cores are in different R1 clusters"
        pos = self.core_position
        return (pos[src_core] - pos[dst_core]) % len(self.clusters[x])

    def cluster_offset(self, src_core: int, dst_core: int) -> int:
        """Relative index of the R1 cluster of `src_core` seen from the R1
        cluster of `dst_core`."""
        cc = self.core_cluster
        return (cc[src_core] - cc[dst_core]) % len(self.clusters)


class EdgeDisposition(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    src: int
    dst: int
    disposition: Disposition


class PlacementMetrics(pydantic.BaseModel):
    extra_neurons: int
    placed: dict[str, int]
    programmable: int
    unplaceable: int
    spurious_in_core: int
    fanin_histogram: dict[int, int]


class PlacementResult(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    assignment: CoreAssignment
    depth: int = pydantic.Field(..., ge=0, le=2)
    clusters: list[list[int]] = pydantic.Field(
        default_factory=list, description="cores of every R1 cluster, by position"
    )
    dispositions: list[EdgeDisposition]
    fanin_used: list[int]
    extra_neurons: int = pydantic.Field(..., ge=0)
    spurious_in_core: list[Edge] = pydantic.Field(default_factory=list)
    manifest: Optional[RunManifest] = None

    @property
    def placed(self) -> list[tuple[Edge, RouterLevel]]:
        out: list[tuple[Edge, RouterLevel]] = []
        for e in self.dispositions:
            if e.disposition == "R0" or e.disposition == "R1" or e.disposition == "R2":
                out.append(((e.src, e.dst), e.disposition))
        return out

    @property
    def programmable(self) -> list[Edge]:
        return [(e.src, e.dst) for e in self.dispositions
                if e.disposition == "programmable"]

    @property
    def unplaceable(self) -> list[Edge]:
        return [(e.src, e.dst) for e in self.dispositions
                if e.disposition == "unplaceable"]

    @pydantic.computed_field  # type: ignore[prop-decorator]
    @property
    def metrics(self) -> PlacementMetrics:
        histogram: dict[int, int] = {}
        for f in self.fanin_used:
            histogram[f] = histogram.get(f, 0) + 1
        placed = {"R0": 0, "R1": 0, "R2": 0}
        for _, level in self.placed:
            placed[level] += 1
        return PlacementMetrics(
            extra_neurons=self.extra_neurons,
            placed=placed,
            programmable=len(self.programmable),
            unplaceable=len(self.unplaceable),
            spurious_in_core=len(self.spurious_in_core),
            fanin_histogram=dict(sorted(histogram.items())),
        )


# --- routing tables ----------------------------------------------------------


class CoreEntry(pydantic.BaseModel):
    core: int
    r1_cluster: int
    position: int


class NeuronTable(pydantic.BaseModel):
    """Listen table of one hardware neuron. Rows are little-endian bit
    strings; a zero row listens to nothing."""

    neuron: int
    core: int
    slot: int
    r0_bit: int = pydantic.Field(0, ge=0, le=1)
    r1_rows: list[str]
    r2_rows: list[str]

    @pydantic.field_validator("r1_rows", "r2_rows")
    def bit_string_validator(cls, v: list[str]) -> list[str]:
        for row in v:
            assert re.match(r"^[01]+$", row), f"row {row!r} is not a bit string"
        return v

    @property
    def is_silent(self) -> bool:
        return self.r0_bit == 0 and all(
            decode_row(r) == 0 for r in self.r1_rows + self.r2_rows
        )


class RoutingTables(pydantic.BaseModel):
    config: FabricConfig
    depth: int = pydantic.Field(..., ge=0, le=2)
    cores: list[CoreEntry]
    neurons: list[NeuronTable]
    programmable: list[Edge] = pydantic.Field(
        default_factory=list,
        description="exact source->destination pairs served by programmable synapses",
    )
    manifest: Optional[RunManifest] = None

    @pydantic.model_validator(mode="after")
    def check_geometry(self) -> RoutingTables:
        for i, t in enumerate(self.neurons):
            if t.neuron != i:
                raise ValueError(f"table {i} belongs to neuron {t.neuron}")
            if t.core < 0 or t.core >= len(self.cores):
                raise ValueError(f"neuron {i} sits in unknown core {t.core}")
            if len(t.r1_rows) != self.config.r1_rows or any(
                len(r) != self.config.r1_row_bits for r in t.r1_rows
            ):
                raise ValueError(
                    f"neuron {i}: expected {self.config.r1_rows} R1 rows of {self.config.r1_row_bits} bits"
                )
            if len(t.r2_rows) != self.config.r2_rows or any(
                len(r) != self.config.r2_row_bits for r in t.r2_rows
            ):
                raise ValueError(
                    f"neuron {i}: expected {self.config.r2_rows} R2 rows of {self.config.r2_row_bits} bits"
                )
        for s, d in self.programmable:
            if not (0 <= s < len(self.neurons) and 0 <= d < len(self.neurons)):
                raise ValueError(f"programmable synapse {s}->{d} out of range")
        return self

    @property
    def topology(self) -> FabricTopology:
        clusters: dict[int, list[CoreEntry]] = {}
        for c in self.cores:
            clusters.setdefault(c.r1_cluster, []).append(c)
        return FabricTopology(
            config=self.config,
            clusters=[[c.core for c in sorted(clusters[x], key=lambda c: c.position)]
                      for x in sorted(clusters.keys())],
        )


# --- simulation --------------------------------------------------------------


class SpikePacket(pydantic.BaseModel):
    source_core_local_id: int = pydantic.Field(..., ge=0)
    distance_field: int = pydantic.Field(..., ge=0)
    current_level: RouterLevel
    address: int = pydantic.Field(
        0, ge=0, description="row selector of the sender at the level of the next hop"
    )


class Hop(pydantic.BaseModel):
    router: str
    level: Literal["R0", "R1", "R2", "core"]
    direction: Literal["local", "up", "down"]
    distance_field: int
    address_bits: int


class DeliveryTrace(pydantic.BaseModel):
    source: int
    receiver: int
    programmable: bool = False
    hops: list[Hop]

    @property
    def hop_count(self) -> int:
        return sum(1 for h in self.hops if h.level != "R0")


class SourceDelivery(pydantic.BaseModel):
    covered: int = 0
    missing: int = 0
    spurious: int = 0


class DeliveryReport(pydantic.BaseModel):
    covered: list[Edge] = pydantic.Field(default_factory=list)
    missing: list[Edge] = pydantic.Field(default_factory=list)
    spurious: list[Edge] = pydantic.Field(default_factory=list)
    per_source: dict[int, SourceDelivery] = pydantic.Field(default_factory=dict)

    @property
    def summary(self) -> str:
        return f"covered: {len(self.covered)}, missing: {len(self.missing)}, spurious: {len(self.spurious)}"


# --- experiments -------------------------------------------------------------


class SweepSpec(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(frozen=True)

    removals: list[int] = pydantic.Field(default_factory=list)
    core_sizes: list[int] = pydantic.Field(default_factory=list)
    enumeration: Literal["all", "sampled"] = "all"
    samples: int = pydantic.Field(
        100, ge=1, description="victim sets drawn per k when sampling"
    )
    seed: int = 0
    with_oracle: bool = False

    @pydantic.field_validator("removals")
    def check_removals(cls, v: list[int]) -> list[int]:
        assert all(k >= 0 for k in v), "removal counts must be >= 0"
        return v

    @pydantic.field_validator("core_sizes")
    def check_core_sizes(cls, v: list[int]) -> list[int]:
        assert all(s >= 1 for s in v), "core sizes must be >= 1"
        return v


class SweepInstance(pydantic.BaseModel):
    k: int
    core_size: int
    victims: list[int]
    extra_neurons: int
    unplaceable: int
    oracle_extra: Optional[int] = None


class SweepAggregate(pydantic.BaseModel):
    k: int
    core_size: int
    samples: int
    total_extra: int
    total_unplaceable: int

    @property
    def mean_extra(self) -> fractions.Fraction:
        return fractions.Fraction(self.total_extra, max(self.samples, 1))

    @property
    def mean_unplaceable(self) -> fractions.Fraction:
        return fractions.Fraction(self.total_unplaceable, max(self.samples, 1))


class SweepResult(pydantic.BaseModel):
    spec: SweepSpec
    aggregates: list[SweepAggregate]
    instances: list[SweepInstance]
    gap_histogram: dict[int, int] = pydantic.Field(
        default_factory=dict,
        description="heuristic minus oracle extra neurons, counted per instance",
    )
    manifest: Optional[RunManifest] = None

    def aggregate(self, k: int, core_size: int) -> SweepAggregate:
        return next(
            a for a in self.aggregates if a.k == k and a.core_size == core_size
        )


class OracleResult(pydantic.BaseModel):
    core_size: int
    num_cores: int
    extra_neurons: int
    unplaceable: int
    partition: list[list[int]]
    partitions_evaluated: int


# --- chip design report ------------------------------------------------------


class ChipSpecRow(pydantic.BaseModel):
    core_size: int
    num_cores: int
    r1_clusters: int
    depth: int
    routing_row_bits: int = pydantic.Field(
        ..., description="R1 and R2 row bits per neuron, excluding the R0 bit"
    )
    bits_per_neuron: int
    total_routing_bits: int
    extra_neurons: int
    unplaceable: int
    programmable_used: int
    fanin_capacity: int


class ChipSpecReport(pydantic.BaseModel):
    rows: list[ChipSpecRow]
    pareto: list[int] = pydantic.Field(
        ...,
        description="indices of rows not dominated in (total_routing_bits, extra_neurons)",
    )
    manifest: Optional[RunManifest] = None

    @property
    def recommended(self) -> list[ChipSpecRow]:
        return [self.rows[i] for i in self.pareto]

    def to_text(self) -> str:
        """Aligned plain-text table; Pareto-minimal rows are starred."""

        header = [
            "core_size", "num_cores", "r1_clusters", "depth", "row_bits",
            "bits/neuron", "total_bits", "extra_neurons", "unplaceable",
            "programmable", "fanin_cap", "pareto"
        ]
        body = [[
            str(r.core_size),
            str(r.num_cores),
            str(r.r1_clusters),
            str(r.depth),
            str(r.routing_row_bits),
            str(r.bits_per_neuron),
            str(r.total_routing_bits),
            str(r.extra_neurons),
            str(r.unplaceable),
            str(r.programmable_used),
            str(r.fanin_capacity),
            "*" if i in self.pareto else "",
        ] for i, r in enumerate(self.rows)]
        widths = [
            max(len(line[c]) for line in [header] + body)
            for c in range(len(header))
        ]
        return "\n".join(
            "  ".join(cell.rjust(w) for cell, w in zip(line, widths)).rstrip()
            for line in [header] + body
        )


RunManifest.model_rebuild()
