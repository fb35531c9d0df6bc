import hypothesis
import hypothesis.strategies as st
import pytest
import snn_fabric
from tests.strategies import networks


def _receivers_from_tables(
    tables: snn_fabric.types.RoutingTables,
    source: int,
) -> set[int]:
    """Read the listen tables directly, without walking the router tree."""

    cfg = tables.config
    by_core = {c.core: c for c in tables.cores}
    cluster_sizes: dict[int, int] = {}
    for c in tables.cores:
        cluster_sizes[c.r1_cluster] = cluster_sizes.get(c.r1_cluster, 0) + 1
    num_clusters = len(cluster_sizes)

    s = tables.neurons[source]
    s_core = by_core[s.core]
    half = s.slot * cfg.r1_rows // cfg.core_size
    fourth = s.slot * cfg.r2_rows // cfg.core_size

    out: set[int] = set()
    for t in tables.neurons:
        if t.neuron == source:
            continue
        t_core = by_core[t.core]
        if t.core == s.core:
            if s.r0_bit == 1 and t.r0_bit == 1:
                out.add(t.neuron)
        elif t_core.r1_cluster == s_core.r1_cluster:
            offset = (s_core.position -
                      t_core.position) % cluster_sizes[s_core.r1_cluster]
            row = (offset - 1) % cfg.r1_rows
            if int(t.r1_rows[row][::-1], 2) == half + 1:
                out.add(t.neuron)
        else:
            offset = (s_core.r1_cluster - t_core.r1_cluster) % num_clusters
            index = s_core.position + sum(
                cluster_sizes[(t_core.r1_cluster + k) % num_clusters]
                for k in range(1, offset)
            )
            row = index % cfg.r2_rows
            if int(t.r2_rows[row][::-1], 2) == fourth + 1:
                out.add(t.neuron)
    out.update(d for src, d in tables.programmable if src == source)
    return out


def _compile(
    net: snn_fabric.types.NetworkModel,
    cfg: snn_fabric.types.FabricConfig = snn_fabric.types.FabricConfig(),
) -> snn_fabric.interfaces.CompileResult:
    return snn_fabric.FabricCompiler(cfg).compile(net, allow_partial=True)


@pytest.mark.library
def test_canonical_delivery() -> None:
    net = snn_fabric.netmodel.build_canonical(4, 4)
    compiled = _compile(net)
    tables = compiled.tables
    assert tables is not None

    assert snn_fabric.simulator.deliver(tables, compiled.topology, 0) == {
        1, 2, 3, 5, 10, 15
    }
    for source in range(16):
        expected = {d for s, d in net.edges if s == source}
        assert snn_fabric.simulator.deliver(tables, source=source) == expected

    report = snn_fabric.simulator.validate(compiled.placement, tables, net)
    assert report.missing == [] and report.spurious == []
    assert len(report.covered) == len(net.edges)
    assert report.summary == "covered: 66, missing: 0, spurious: 0"
    assert report.per_source[0].covered == 6

    with pytest.raises(snn_fabric.errors.UnknownNeuronError):
        snn_fabric.simulator.deliver(tables, source=16)


@pytest.mark.library
def test_silent_tables_deliver_nothing() -> None:
    net = snn_fabric.netmodel.build_canonical(2, 4)
    tables = _compile(net).tables
    assert tables is not None
    silent = tables.model_copy(
        update={
            "neurons": [
                t.model_copy(
                    update={
                        "r0_bit": 0,
                        "r1_rows": ["0"] * 2,
                        "r2_rows": ["00"] * 4,
                    }
                ) for t in tables.neurons
            ]
        }
    )
    for source in range(8):
        assert snn_fabric.simulator.deliver(silent, source=source) == set()


@pytest.mark.library
def test_traces() -> None:
    net = snn_fabric.netmodel.build_canonical(4, 4)
    tables = _compile(net).tables
    assert tables is not None

    traces = snn_fabric.simulator.trace(tables, source=0)
    assert [t.receiver for t in traces] == [1, 2, 3, 5, 10, 15]

    local = traces[0]
    assert [h.level for h in local.hops] == ["R0"]
    assert local.hops[0].distance_field == 0
    assert local.hop_count == 0

    sibling = traces[3]
    assert sibling.receiver == 5 and sibling.programmable
    assert [h.level for h in sibling.hops] == ["R1", "core"]
    assert sibling.hops[0].address_bits == 0

    far = traces[4]
    assert [h.level for h in far.hops] == ["R1", "R2", "R1", "core"]
    assert [h.direction for h in far.hops] == ["up", "down", "down", "down"]
    assert [h.distance_field for h in far.hops] == [3, 2, 1, 0]
    assert far.hop_count == 4
    # the R2 router hands core 2 the selector of the first fourth
    assert far.hops[1].address_bits == 1

    # R1 delivery in a two-core cluster
    net = snn_fabric.types.NetworkModel(
        neurons=8,
        edges=sorted({(a, b) for g in [range(4), range(4, 8)] for a in g
                      for b in g if a != b} |
                     {(0, 6), (1, 6), (0, 7), (1, 7)}),
    )
    compiled = _compile(net)
    assert compiled.tables is not None
    assert compiled.placement.depth == 1
    assert snn_fabric.simulator.deliver(compiled.tables, source=0) == {1, 2, 3, 6, 7}
    sibling = [t for t in snn_fabric.simulator.trace(compiled.tables, source=0)
               if t.receiver == 6][0]
    assert [h.level for h in sibling.hops] == ["R1", "core"]
    assert [h.direction for h in sibling.hops] == ["up", "down"]
    assert sibling.hops[0].address_bits == 1


@pytest.mark.library
def test_r2_delivery_reaches_exactly_one_fourth() -> None:
    net = snn_fabric.types.NetworkModel(
        neurons=8,
        edges=sorted({(a, b) for g in [range(4), range(4, 8)] for a in g
                      for b in g if a != b} | {(0, 5)}),
    )
    compiled = _compile(net, snn_fabric.types.FabricConfig(cores_per_r1=1))
    assert compiled.tables is not None
    assert compiled.tables.neurons[5].r2_rows == ["10", "00", "00", "00"]
    assert snn_fabric.simulator.deliver(compiled.tables, source=0) == {1, 2, 3, 5}
    assert snn_fabric.simulator.deliver(compiled.tables, source=1) == {0, 2, 3}


@pytest.mark.library
@pytest.mark.parametrize("core_size", [4, 8])
def test_full_listen_tables_reach_the_fanin_capacity(core_size: int) -> None:
    # neuron 0 sets every row of a full fabric to the first granule
    cfg = snn_fabric.types.FabricConfig(core_size=core_size)
    per_r1 = cfg.cores_per_r1
    on_r1 = snn_fabric.types.encode_row(1, cfg.r1_row_bits)
    on_r2 = snn_fabric.types.encode_row(1, cfg.r2_row_bits)
    tables = snn_fabric.types.RoutingTables(
        config=cfg,
        depth=2,
        cores=[
            snn_fabric.types.CoreEntry(
                core=c, r1_cluster=c // per_r1, position=c % per_r1
            ) for c in range(cfg.max_cores)
        ],
        neurons=[
            snn_fabric.types.NeuronTable(
                neuron=i,
                core=i // core_size,
                slot=i % core_size,
                r0_bit=1 if i < core_size else 0,
                r1_rows=[on_r1 if i == 0 else "0" * cfg.r1_row_bits] * cfg.r1_rows,
                r2_rows=[on_r2 if i == 0 else "0" * cfg.r2_row_bits] * cfg.r2_rows,
            ) for i in range(cfg.max_cores * core_size)
        ],
    )

    heard = [
        s for s in range(len(tables.neurons))
        if 0 in snn_fabric.simulator.deliver(tables, source=s)
    ]
    assert len(heard) == cfg.fanin_capacity
    assert len(heard) == {4: 21, 8: 43}[core_size]
    assert heard == [
        s for s in range(len(tables.neurons))
        if 0 in _receivers_from_tables(tables, s)
    ]


@pytest.mark.library
def test_validate_reports() -> None:
    # reverse pair of a one-directional edge inside a core is spurious
    net = snn_fabric.types.NetworkModel(neurons=2, edges=[(0, 1)])
    cfg = snn_fabric.types.FabricConfig(core_size=2)
    assignment = snn_fabric.placer.assignment_from_cores([[0, 1]], 2)
    placement, topology = snn_fabric.placer.compile_placement(net, cfg, assignment)
    tables = snn_fabric.fabric.synthesize_tables(placement, topology)
    report = snn_fabric.simulator.validate(placement, tables, net, topology)
    assert report.covered == [(0, 1)]
    assert report.spurious == [(1, 0)]

    # unplaceable connections are neither covered nor missing
    canonical = snn_fabric.netmodel.build_canonical(4, 4)
    partial = snn_fabric.FabricCompiler(
        snn_fabric.types.FabricConfig(fanin_budget=0, programmable_per_core=1)
    ).compile(canonical, allow_partial=True)
    assert partial.tables is not None
    report = snn_fabric.simulator.validate(partial.placement, partial.tables, canonical)
    assert len(report.covered) == 48 + 4
    assert report.missing == []
    assert len(partial.placement.unplaceable) == 14

    # a cleared crossbar bit is missed
    tampered = partial.tables.model_copy(deep=True)
    tampered.neurons[0].r0_bit = 0
    report = snn_fabric.simulator.validate(partial.placement, tampered, canonical)
    assert (0, 1) in report.missing and (1, 0) in report.missing

    with pytest.raises(snn_fabric.errors.InconsistentInputError):
        snn_fabric.simulator.validate(placement, tables, canonical)


@hypothesis.settings(max_examples=1000, deadline=None)
@hypothesis.given(net=networks(), core_size=st.integers(min_value=2, max_value=4))
@pytest.mark.library
@pytest.mark.slow
def test_delivery_soundness(
    net: snn_fabric.types.NetworkModel, core_size: int
) -> None:
    compiled = _compile(net, snn_fabric.types.FabricConfig(core_size=core_size))
    tables = compiled.tables
    assert tables is not None
    width = {"R1": tables.config.r1_row_bits, "R2": tables.config.r2_row_bits}
    programmable_targets = {d for _, d in tables.programmable}
    edge_set = set(net.edges)

    report = snn_fabric.simulator.validate(compiled.placement, tables, net)
    assert report.missing == []
    for s, d in report.spurious:
        assert (s, d) not in edge_set

    for source in range(net.neurons):
        traces = snn_fabric.simulator.trace(tables, source=source)
        receivers = {t.receiver for t in traces}
        assert receivers == _receivers_from_tables(tables, source)
        for t in traces:
            assert t.hop_count <= 2 * tables.depth
            for hop in t.hops:
                if hop.level in width:
                    assert hop.address_bits <= width[hop.level]
        for r in receivers:
            if tables.neurons[r].is_silent:
                assert r in programmable_targets
