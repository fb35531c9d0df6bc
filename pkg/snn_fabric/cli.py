from typing import Any, Callable, Optional, TypeVar
import functools
import json
import logging
import os
import sys
import click
import snn_fabric

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])


def _handle_errors(func: F) -> F:
    """Print hard errors as `error: ...` on stderr and exit with code 1."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (ValueError, OSError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(1)

    return wrapper  # type: ignore[return-value]


def _int_list(
    ctx: click.Context, param: click.Parameter, value: Optional[str]
) -> Optional[list[int]]:
    if value is None:
        return None
    try:
        return [int(x) for x in value.split(",") if x.strip() != ""]
    except ValueError:
        raise click.BadParameter(f"expected comma separated integers, got {value!r}")


def _profile(
    ctx: click.Context, param: click.Parameter, value: Optional[str]
) -> Optional[snn_fabric.types.DecayProfile]:
    if value is None:
        return None
    counts: dict[int, int] = {}
    try:
        for item in value.split(","):
            distance, count = item.split(":")
            counts[int(distance)] = int(count)
    except ValueError:
        raise click.BadParameter(
            f"expected 'distance:count' pairs like 1:2,2:1, got {value!r}"
        )
    return snn_fabric.types.DecayProfile(per_distance_count=counts)


@click.group()
@click.option("--verbose", is_flag=True, help="Log pipeline details to stderr.")
@click.version_option(snn_fabric.__version__, prog_name="snn-fabric")
def main(verbose: bool) -> None:
    """Compile spiking neural networks onto a hierarchical multi-core fabric."""

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


@main.command()
@click.option("-p", "--populations", type=int, required=True, help="Number of populations.")
@click.option("-n", "--pop-size", type=int, required=True, help="Neurons per population.")
@click.option(
    "--profile",
    callback=_profile,
    default=None,
    help="Connections per population distance, e.g. 1:2,2:1,3:1.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@_handle_errors
def generate(
    populations: int,
    pop_size: int,
    profile: Optional[snn_fabric.types.DecayProfile],
    seed: int,
    out: str,
) -> None:
    """Write the canonical small-world network."""

    net = snn_fabric.netmodel.build_canonical(populations, pop_size, profile, seed)
    net = net.model_copy(
        update={"manifest": snn_fabric.loader.create_manifest([])}
    )
    snn_fabric.loader.dump_model(net, out)
    logger.info(f"wrote {net.neurons} neurons and {len(net.edges)} edges to {out}")


@main.command(name="compile")
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--fabric", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("-o", "--out", type=click.Path(file_okay=False), required=True)
@click.option(
    "--allow-partial",
    is_flag=True,
    help="Write tables even if connections are unplaceable (exit code 2).",
)
@_handle_errors
def compile_command(
    network: str,
    fabric: Optional[str],
    out: str,
    allow_partial: bool,
) -> None:
    """Place NETWORK onto the fabric and write placement.json and tables.json
    into the output directory."""

    inputs = [network] + ([fabric] if fabric is not None else [])
    net = snn_fabric.loader.load_network(network)
    cfg = snn_fabric.loader.load_fabric(fabric)
    manifest = snn_fabric.loader.create_manifest(inputs, cfg)

    compiled = snn_fabric.interfaces.FabricCompiler(cfg).compile(
        net, allow_partial=allow_partial
    )
    assert compiled.tables is not None
    snn_fabric.loader.dump_model(
        compiled.placement.model_copy(update={"manifest": manifest}),
        os.path.join(out, "placement.json"),
    )
    snn_fabric.loader.dump_model(
        compiled.tables.model_copy(update={"manifest": manifest}),
        os.path.join(out, "tables.json"),
    )
    click.echo(compiled.placement.metrics.model_dump_json())

    if not compiled.complete:
        for s, d in compiled.placement.unplaceable:
            click.echo(f"unplaceable: {s}->{d}", err=True)
        sys.exit(2)


@main.command()
@click.argument("tables_path", metavar="TABLES", type=click.Path(exists=True, dir_okay=False))
@click.option("--source", type=int, default=None, help="Neuron that spikes.")
@click.option("--all", "all_sources", is_flag=True, help="Let every neuron spike.")
@click.option("--trace", "show_trace", is_flag=True, help="Print the hop log of every delivery.")
@click.option("--validate", "run_validation", is_flag=True)
@click.option("--network", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--placement", type=click.Path(exists=True, dir_okay=False), default=None)
@_handle_errors
def simulate(
    tables_path: str,
    source: Optional[int],
    all_sources: bool,
    show_trace: bool,
    run_validation: bool,
    network: Optional[str],
    placement: Optional[str],
) -> None:
    """Send spikes through the routing tables and print the receivers as
    JSON lines. With --validate, compare against the network (exit code 2
    when a placed connection is not delivered)."""

    if (source is None) == (not all_sources):
        raise click.UsageError("pass exactly one of --source and --all")
    if run_validation and (network is None or placement is None):
        raise click.UsageError("--validate needs --network and --placement")

    tables = snn_fabric.loader.load_tables(tables_path)
    topology = tables.topology
    sources = range(len(tables.neurons)) if all_sources else [source or 0]
    for k in sources:
        traces = snn_fabric.simulator.trace(tables, topology, k)
        receivers = sorted({t.receiver for t in traces})
        click.echo(json.dumps({"source": k, "receivers": receivers}))
        if show_trace:
            for t in traces:
                kind = " (programmable)" if t.programmable else ""
                click.echo(f"  {t.source} -> {t.receiver}{kind}")
                for hop in t.hops:
                    click.echo(
                        f"    {hop.router:<12} {hop.direction:<5} " +
                        f"distance={hop.distance_field} address_bits={hop.address_bits}"
                    )

    if run_validation:
        assert network is not None and placement is not None
        report = snn_fabric.simulator.validate(
            snn_fabric.loader.load_placement(placement),
            tables,
            snn_fabric.loader.load_network(network),
            topology,
        )
        click.echo(report.summary)
        if len(report.missing) > 0:
            sys.exit(2)


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--remove", callback=_int_list, required=True, help="Removal counts, e.g. 1,2,3.")
@click.option("--core-sizes", callback=_int_list, required=True, help="Core sizes, e.g. 2,3,4.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), required=True)
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
@click.option("--fabric", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--sample", type=int, default=None, help="Draw this many victim sets per k.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--oracle", is_flag=True, help="Compare every instance with the exhaustive oracle.")
@_handle_errors
def sweep(
    network: str,
    remove: list[int],
    core_sizes: list[int],
    csv_path: str,
    json_path: Optional[str],
    fabric: Optional[str],
    sample: Optional[int],
    seed: int,
    workers: int,
    oracle: bool,
) -> None:
    """Remove neurons from NETWORK in every possible way, compile every
    deviation per core size and write the mean overheads as CSV. Prints the
    chip-design recommendation for NETWORK afterwards."""

    inputs = [network] + ([fabric] if fabric is not None else [])
    base = snn_fabric.loader.load_network(network)
    cfg = snn_fabric.loader.load_fabric(fabric)
    manifest = snn_fabric.loader.create_manifest(inputs, cfg)
    spec = snn_fabric.types.SweepSpec(
        removals=remove,
        core_sizes=core_sizes,
        enumeration="all" if sample is None else "sampled",
        samples=sample if sample is not None else 100,
        seed=seed,
        with_oracle=oracle,
    )

    result = snn_fabric.experiments.deviation_sweep(base, spec, cfg, workers=workers)
    snn_fabric.experiments.emit_csv(result, csv_path)
    if json_path is not None:
        snn_fabric.experiments.emit_json(
            result.model_copy(update={"manifest": manifest}), json_path
        )
    if oracle:
        click.echo(f"oracle gap histogram: {json.dumps(result.gap_histogram)}")

    report = snn_fabric.interfaces.FabricCompiler(cfg).chip_spec(base, core_sizes)
    click.echo(report.to_text())


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--core-sizes", callback=_int_list, required=True, help="Core sizes, e.g. 2,3,4.")
@click.option("--fabric", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "json_path", type=click.Path(dir_okay=False), default=None)
@_handle_errors
def report(
    network: str,
    core_sizes: list[int],
    fabric: Optional[str],
    json_path: Optional[str],
) -> None:
    """Print how many cores, router levels and routing bits NETWORK needs per
    core size, with the Pareto-minimal choices starred."""

    inputs = [network] + ([fabric] if fabric is not None else [])
    net = snn_fabric.loader.load_network(network)
    cfg = snn_fabric.loader.load_fabric(fabric)
    manifest = snn_fabric.loader.create_manifest(inputs, cfg)
    chip_report = snn_fabric.interfaces.FabricCompiler(cfg).chip_spec(net, core_sizes)
    if json_path is not None:
        snn_fabric.loader.dump_model(
            chip_report.model_copy(update={"manifest": manifest}), json_path
        )
    click.echo(chip_report.to_text())


if __name__ == "__main__":
    main()
