import fractions
import math
import os
import hypothesis
import pytest
import snn_fabric
from tests.strategies import networks

CANONICAL = snn_fabric.netmodel.build_canonical(4, 4)


@pytest.mark.library
def test_victim_sets() -> None:
    spec = snn_fabric.types.SweepSpec(removals=[2], core_sizes=[4])
    assert len(snn_fabric.experiments.victim_sets(16, 2, spec)) == 120
    assert snn_fabric.experiments.victim_sets(16, 0, spec) == [()]

    sampled = snn_fabric.types.SweepSpec(
        removals=[3], core_sizes=[4], enumeration="sampled", samples=10, seed=7
    )
    a = snn_fabric.experiments.victim_sets(16, 3, sampled)
    b = snn_fabric.experiments.victim_sets(16, 3, sampled)
    assert a == b
    assert len(a) == 10 and len(set(a)) == 10
    full = set(snn_fabric.experiments.victim_sets(16, 3, spec))
    assert set(a).issubset(full)

    with pytest.raises(ValueError):
        snn_fabric.experiments.victim_sets(16, 16, spec)


@pytest.mark.library
def test_sweep_without_removals_echoes_the_base() -> None:
    spec = snn_fabric.types.SweepSpec(removals=[0], core_sizes=[2, 3, 4])
    result = snn_fabric.experiments.deviation_sweep(CANONICAL, spec)
    assert [(a.k, a.core_size, a.samples) for a in result.aggregates] == [
        (0, 2, 1), (0, 3, 1), (0, 4, 1)
    ]
    assert [a.mean_extra for a in result.aggregates] == [0, 8, 0]
    assert all(a.mean_unplaceable >= 0 for a in result.aggregates)


@pytest.mark.library
def test_single_removals() -> None:
    spec = snn_fabric.types.SweepSpec(removals=[1], core_sizes=[2, 3, 4])
    result = snn_fabric.experiments.deviation_sweep(CANONICAL, spec)
    assert result.aggregate(1, 2).mean_extra == 1
    assert result.aggregate(1, 3).mean_extra == 6
    assert result.aggregate(1, 4).mean_extra == 1
    assert all(a.samples == 16 for a in result.aggregates)

    # aggregates are recomputable from the raw instances
    for a in result.aggregates:
        rows = [
            i for i in result.instances if i.k == a.k and i.core_size == a.core_size
        ]
        assert a.mean_extra == fractions.Fraction(
            sum(i.extra_neurons for i in rows), len(rows)
        )
        assert a.mean_unplaceable == fractions.Fraction(
            sum(i.unplaceable for i in rows), len(rows)
        )


@pytest.mark.library
@pytest.mark.slow
def test_deviation_sweep_ordering() -> None:
    spec = snn_fabric.types.SweepSpec(removals=[1, 2, 3], core_sizes=[2, 3, 4])
    result = snn_fabric.experiments.deviation_sweep(CANONICAL, spec, workers=2)

    for k in [1, 2, 3]:
        for size in [2, 3, 4]:
            assert result.aggregate(k, size).samples == math.comb(16, k)
        size2 = result.aggregate(k, 2).mean_extra
        size3 = result.aggregate(k, 3).mean_extra
        size4 = result.aggregate(k, 4).mean_extra
        assert size3 > size4
        assert size3 > size2
        assert size2 <= size4

    assert result.aggregate(2, 2).mean_extra == fractions.Fraction(8, 5)
    assert result.aggregate(2, 3).mean_extra == fractions.Fraction(23, 5)
    assert result.aggregate(2, 4).mean_extra == 2
    assert result.aggregate(3, 2).mean_extra == fractions.Fraction(1072, 560)
    assert result.aggregate(3, 3).mean_extra == fractions.Fraction(2080, 560)
    assert result.aggregate(3, 4).mean_extra == 3


@pytest.mark.library
def test_parallel_sweep_matches_serial() -> None:
    spec = snn_fabric.types.SweepSpec(removals=[1], core_sizes=[3, 4])
    serial = snn_fabric.experiments.deviation_sweep(CANONICAL, spec)
    parallel = snn_fabric.experiments.deviation_sweep(CANONICAL, spec, workers=2)
    assert serial.aggregates == parallel.aggregates
    assert serial.instances == parallel.instances


@pytest.mark.library
def test_oracle_examples() -> None:
    result = snn_fabric.experiments.exhaustive_oracle(CANONICAL, 4)
    assert (result.extra_neurons, result.unplaceable) == (0, 0)
    assert result.partition == [
        [0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11], [12, 13, 14, 15]
    ]

    pair = snn_fabric.types.NetworkModel(neurons=2, edges=[(0, 1), (1, 0)])
    result = snn_fabric.experiments.exhaustive_oracle(pair, 2)
    assert (result.extra_neurons, result.unplaceable) == (0, 0)

    triangle = snn_fabric.types.NetworkModel(
        neurons=3,
        edges=[(a, b) for a in range(3) for b in range(3) if a != b],
    )
    result = snn_fabric.experiments.exhaustive_oracle(triangle, 2)
    assert result.num_cores == 2
    assert result.extra_neurons == 1
    assert result.unplaceable >= 0

    with pytest.raises(snn_fabric.errors.OracleSizeError):
        snn_fabric.experiments.exhaustive_oracle(
            snn_fabric.types.NetworkModel(neurons=17), 4
        )


@pytest.mark.library
@pytest.mark.slow
def test_oracle_agrees_on_single_removals() -> None:
    for victim in range(16):
        net = snn_fabric.netmodel.remove_neurons(CANONICAL, {victim})
        heuristic = snn_fabric.placer.assign_cores(net, 4)
        oracle = snn_fabric.experiments.exhaustive_oracle(net, 4)
        assert heuristic.extra_neurons == oracle.extra_neurons

    spec = snn_fabric.types.SweepSpec(removals=[1], core_sizes=[4], with_oracle=True)
    result = snn_fabric.experiments.deviation_sweep(CANONICAL, spec)
    assert result.gap_histogram == {0: 16}


@hypothesis.settings(max_examples=100, deadline=None)
@hypothesis.given(net=networks(min_neurons=8, max_neurons=12))
@pytest.mark.library
@pytest.mark.slow
def test_heuristic_never_beats_the_oracle(
    net: snn_fabric.types.NetworkModel
) -> None:
    heuristic = snn_fabric.placer.assign_cores(net, 4)
    oracle = snn_fabric.experiments.exhaustive_oracle(net, 4)
    assert heuristic.extra_neurons >= oracle.extra_neurons
    assert oracle.partitions_evaluated >= 1


@pytest.mark.library
def test_emit_csv(tmp_path: str) -> None:
    spec = snn_fabric.types.SweepSpec(removals=[1, 0], core_sizes=[4, 3])
    result = snn_fabric.experiments.deviation_sweep(CANONICAL, spec)
    path = os.path.join(tmp_path, "sweep.csv")
    snn_fabric.experiments.emit_csv(result, path)
    with open(path) as f:
        lines = f.read().splitlines()
    assert lines[0] == "k,core_size,mean_extra_neurons,mean_unplaceable,samples"
    assert [tuple(line.split(",")[:2]) for line in lines[1 :]] == [
        ("0", "3"), ("0", "4"), ("1", "3"), ("1", "4")
    ]
    assert lines[3].split(",")[2] == "6"
    assert lines[4].split(",")[4] == "16"

    with open(path, "rb") as f:
        first = f.read()
    snn_fabric.experiments.emit_csv(
        snn_fabric.experiments.deviation_sweep(CANONICAL, spec), path
    )
    with open(path, "rb") as f:
        assert f.read() == first

    empty = snn_fabric.experiments.deviation_sweep(
        CANONICAL, snn_fabric.types.SweepSpec()
    )
    snn_fabric.experiments.emit_csv(empty, path)
    with open(path) as f:
        assert f.read() == "k,core_size,mean_extra_neurons,mean_unplaceable,samples\n"

    mirror = os.path.join(tmp_path, "sweep.json")
    snn_fabric.experiments.emit_json(result, mirror)
    assert snn_fabric.loader.load_sweep(mirror).aggregates == result.aggregates


@pytest.mark.library
def test_six_significant_digits(tmp_path: str) -> None:
    result = snn_fabric.types.SweepResult(
        spec=snn_fabric.types.SweepSpec(),
        aggregates=[
            snn_fabric.types.SweepAggregate(
                k=3, core_size=2, samples=560, total_extra=1072, total_unplaceable=1
            )
        ],
        instances=[],
    )
    path = os.path.join(tmp_path, "sweep.csv")
    snn_fabric.experiments.emit_csv(result, path)
    with open(path) as f:
        assert f.read().splitlines()[1] == "3,2,1.91429,0.00178571,560"
