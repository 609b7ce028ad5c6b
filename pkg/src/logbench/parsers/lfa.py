"""Token-frequency baseline parser.

Two passes: the first counts how often each (position, token) pair occurs
across the stream (weighted by record multiplicity), the second rewrites
each message, keeping a token when its positional count is at least
``threshold`` times the strongest count in that message and replacing it
with ``<*>`` otherwise.  Messages rewriting to the same template form one
group.  The strongest token always survives, so no template is all
placeholders.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from ..errors import ConfigurationError
from ..model import PLACEHOLDER, LogRecord, ParseResult
from . import check_parameters, result_from_clusters

DEFAULTS = {"threshold": 0.5}


class LfaParser:
    """Frequency-based parser with a relative positional threshold."""

    PARAMETER_DEFAULTS = DEFAULTS

    def __init__(self, threshold: float = 0.5):
        params = check_parameters("lfa", DEFAULTS, {"threshold": threshold})
        if not 0 < params["threshold"] <= 1:
            raise ConfigurationError("lfa: threshold must be in (0, 1]")
        self.threshold = params["threshold"]

    def parse(self, records: Iterable[LogRecord]) -> ParseResult:
        stream = list(records)
        counts: Counter[tuple[int, str]] = Counter()
        for record in stream:
            weight = record.multiplicity
            for pos, token in enumerate(record.content.split()):
                counts[(pos, token)] += weight

        clusters: dict[str, list[int]] = {}
        for record in stream:
            tokens = record.content.split()
            freqs = [counts[(pos, token)] for pos, token in enumerate(tokens)]
            cut = self.threshold * max(freqs)
            text = " ".join(
                token if freq >= cut else PLACEHOLDER
                for token, freq in zip(tokens, freqs)
            )
            clusters.setdefault(text, []).append(record.line_id)
        return result_from_clusters(clusters.items())
