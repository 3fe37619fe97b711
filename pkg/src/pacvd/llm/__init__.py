from .gateway import (
    AuthMissing, Gateway, GatewayError, HttpProvider, ProviderConfig, ProviderError,
    TransportError, Verdict, complete,
)
from .mock import MockProvider, RecordingProvider, Rule, UnscriptedPrompt, fingerprint
from .ratelimit import TokenBucket
from .verdict import NO, UNPARSEABLE, YES, parse_verdict

__all__ = [
    "AuthMissing", "Gateway", "GatewayError", "HttpProvider", "MockProvider", "NO",
    "ProviderConfig", "ProviderError", "RecordingProvider", "Rule", "TokenBucket",
    "TransportError", "UNPARSEABLE", "UnscriptedPrompt", "Verdict", "YES", "complete",
    "fingerprint", "parse_verdict",
]
