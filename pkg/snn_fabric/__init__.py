__version__ = "0.1.0"

from . import types
from . import errors
from . import netmodel
from . import fabric
from . import placer
from . import simulator
from . import interfaces
from . import experiments
from . import loader
from .interfaces import FabricCompiler
from .loader import load_network, load_fabric, load_example_fabric, load_example_network
