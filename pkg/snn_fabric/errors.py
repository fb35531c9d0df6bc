class SnnFabricError(Exception):
    """Base class of all errors raised by `snn_fabric`."""


class InputFileError(SnnFabricError, ValueError):
    """A network, fabric, placement or tables file could not be parsed.

    The message names the file and the offending field or JSON position."""


class UnknownNeuronError(SnnFabricError, ValueError):
    pass


class FabricTooSmallError(SnnFabricError, ValueError):
    """The fabric cannot hold the cores or R1 clusters a network needs."""

    def __init__(self, what: str, required: int, available: int) -> None:
        self.what = what
        self.required = required
        self.available = available
        super().__init__(
            f"fabric too small: {what} required {required}, available {available}"
        )


class TableCollisionError(SnnFabricError, ValueError):
    """A placed edge cannot be written into the routing tables without
    colliding with another row or over-delivering beyond the row granularity."""

    def __init__(self, edge: tuple[int, int], reason: str) -> None:
        self.edge = edge
        super().__init__(f"edge {edge[0]}->{edge[1]}: {reason}")


class OracleSizeError(SnnFabricError, ValueError):
    pass


class PartialPlacementError(SnnFabricError, ValueError):
    """Routing tables were requested for a placement with unplaceable edges."""


class InconsistentInputError(SnnFabricError, ValueError):
    """Two artifacts that must describe the same network disagree, e.g.
    tables and placement of different sizes."""
