from typing import Optional, TypeVar
import datetime
import hashlib
import os
import pydantic
import tum_esm_utils
import snn_fabric

_SAMPLE_DATA_DIR = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "sample_data"
)

M = TypeVar("M", bound=pydantic.BaseModel)


def _format_validation_error(e: pydantic.ValidationError) -> str:
    parts: list[str] = []
    for error in e.errors():
        location = ".".join(str(x) for x in error["loc"])
        parts.append(
            f"{location}: {error['msg']}" if location else error["msg"]
        )
    return "; ".join(parts)


def load_model(path: str, model: type[M]) -> M:
    """Parse a JSON file into `model`.

    Raises:
        FileNotFoundError:  If the file does not exist.
        InputFileError:     If the content is not valid JSON or does not
                            validate; the message names the file and the
                            offending field or JSON position."""

    content = tum_esm_utils.files.load_file(path)
    try:
        return model.model_validate_json(content)
    except pydantic.ValidationError as e:
        raise snn_fabric.errors.InputFileError(
            f"{path}: {_format_validation_error(e)}"
        ) from e


def dump_model(model: pydantic.BaseModel, path: str) -> None:
    """Write `model` as indented JSON, leaving out unset optional blocks."""

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tum_esm_utils.files.dump_file(
        path, model.model_dump_json(indent=2, exclude_none=True) + "\n"
    )


def load_network(path: str) -> snn_fabric.types.NetworkModel:
    return load_model(path, snn_fabric.types.NetworkModel)


def load_fabric(path: Optional[str] = None) -> snn_fabric.types.FabricConfig:
    """Load a fabric file; without a path the default fabric is returned."""

    if path is None:
        return snn_fabric.types.FabricConfig()
    return load_model(path, snn_fabric.types.FabricConfig)


def load_placement(path: str) -> snn_fabric.types.PlacementResult:
    return load_model(path, snn_fabric.types.PlacementResult)


def load_tables(path: str) -> snn_fabric.types.RoutingTables:
    return load_model(path, snn_fabric.types.RoutingTables)


def load_sweep(path: str) -> snn_fabric.types.SweepResult:
    return load_model(path, snn_fabric.types.SweepResult)


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def manifest_timestamp() -> str:
    """UTC timestamp of the run, taken from `SOURCE_DATE_EPOCH` when set so
    artifacts can be reproduced byte for byte."""

    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None and epoch.strip() != "":
        moment = datetime.datetime.fromtimestamp(
            int(epoch), tz=datetime.timezone.utc
        )
    else:
        moment = datetime.datetime.now(tz=datetime.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def create_manifest(
    input_paths: list[str],
    fabric: Optional[snn_fabric.types.FabricConfig] = None,
) -> snn_fabric.types.RunManifest:
    """Provenance record of one run. Digests are taken before any input is
    processed further."""

    return snn_fabric.types.RunManifest(
        tool_version=snn_fabric.__version__,
        input_digests={
            os.path.basename(p): file_digest(p)
            for p in input_paths
        },
        fabric=fabric,
        timestamp=manifest_timestamp(),
    )


def load_example_fabric() -> snn_fabric.types.FabricConfig:
    return load_fabric(os.path.join(_SAMPLE_DATA_DIR, "fabric.json"))


def load_example_network() -> snn_fabric.types.NetworkModel:
    return load_network(os.path.join(_SAMPLE_DATA_DIR, "network.json"))
