"""lantree: corpora as conditional-frequency tries, language models as probed
probability tries, and metrics that measure how well the two line up."""

__version__ = "0.1.0"
