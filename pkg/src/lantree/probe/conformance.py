"""Protocol conformance checks, reusable against any backend.

The primary test suite runs these against in-process fakes; a server
implementation can import and run the same checks against its live HTTP
endpoints to prove wire-level compatibility.
"""

from __future__ import annotations

import math

from lantree.probe.client import ProbeClient

MASS_TOL = 1e-6


def run_protocol_conformance(client: ProbeClient, sample_text: str) -> None:
    """Assert the backend behind ``client`` honors the probe protocol.

    Raises AssertionError with a named check on the first violation.
    """
    info = client.info()
    for field_name, kind in (
        ("model", str),
        ("vocab_size", int),
        ("context_window", int),
        ("tokenizer_hash", str),
    ):
        assert field_name in info, f"info missing field {field_name!r}"
        assert isinstance(info[field_name], kind), f"info field {field_name!r} has wrong type"

    tokens = client.tokenize_text(sample_text)
    assert all(isinstance(t, int) and 0 <= t < info["vocab_size"] for t in tokens), (
        "tokenize returned ids outside [0, vocab_size)"
    )
    assert client.tokenize_text(sample_text) == tokens, "tokenize is not deterministic"
    round_tripped = client.detokenize_tokens(tokens)
    assert client.tokenize_text(round_tripped) == tokens, (
        "tokenize(detokenize(ids)) != ids; tokenizer endpoints are inconsistent"
    )

    assert tokens, "sample text tokenized to nothing; pick a richer sample"
    context = tokens[:1]
    for top_m in (1, 5):
        dist = client.next_token_dist(context, top_m=top_m)
        assert len(dist.entries) <= top_m, "more entries than top_m"
        assert abs(dist.total_mass() - 1.0) <= MASS_TOL, (
            f"mass {dist.total_mass()} not within 1e-6 of 1"
        )
        again = client.next_token_dist(context, top_m=top_m)
        assert again == dist, "identical probe requests returned different responses"
    wide = client.next_token_dist(context, top_m=max(info["vocab_size"], 1))
    narrow = client.next_token_dist(context, top_m=1)
    if wide.entries:
        assert narrow.entries == wide.entries[:1], "top_m=1 is not a prefix of the full ranking"
        assert math.isclose(
            narrow.truncated_mass + narrow.entries[0][1], 1.0, abs_tol=MASS_TOL
        ), "top_m=1 truncated mass does not cover the remainder"

    generated = client.greedy_generate(context, max_new=4)
    assert len(generated) <= 4, "generate exceeded max_new"
    assert client.greedy_generate(context, max_new=4) == generated, (
        "generate is not deterministic"
    )
    if generated:
        # Suffix-only contract plus greedy consistency on the first step.
        first = client.next_token_dist(context, top_m=1)
        assert first.entries and generated[0] == first.entries[0][0], (
            "first generated token is not the argmax of the next-token distribution"
        )
        stopped = client.greedy_generate(context, max_new=4, stop={generated[0]})
        assert stopped == [], "stop token was not honored"
