"""adexport: convert ad-image directories into ad-manifest files."""

__version__ = "0.1.0"

from .backends import PixelStatBackend, TorchvisionBackend, load_backend  # noqa: F401
from .export import ExportJob, ExportResult, export, read_metadata  # noqa: F401
