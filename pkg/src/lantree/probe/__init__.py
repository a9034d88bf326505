from lantree.probe.backends import (
    CountingBackend,
    FrequencyOracleBackend,
    InProcessTransport,
)
from lantree.probe.cache import ProbeCache
from lantree.probe.client import HttpTransport, ProbeClient
from lantree.probe.protocol import (
    BackendDescriptor,
    NextTokenDist,
    ProbeRequest,
    make_next_token_response,
    parse_next_token_response,
)

__all__ = [
    "BackendDescriptor",
    "CountingBackend",
    "FrequencyOracleBackend",
    "HttpTransport",
    "InProcessTransport",
    "NextTokenDist",
    "ProbeCache",
    "ProbeClient",
    "ProbeRequest",
    "make_next_token_response",
    "parse_next_token_response",
]
