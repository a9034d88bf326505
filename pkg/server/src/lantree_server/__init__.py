"""lantree-server: reference backend for the model-probe wire protocol."""

__version__ = "0.1.0"
