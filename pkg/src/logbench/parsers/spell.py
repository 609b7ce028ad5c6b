"""Streaming LCS parser.

Each incoming message is compared to existing cluster templates by longest
common subsequence; it joins the cluster with the longest LCS when that
length clears the acceptance ratio (relative to the message length), and
the cluster's template becomes the LCS skeleton: the common tokens in
order, with one ``<*>`` marking every gap where either side had extra
tokens.  Repeated contents join the cluster their first occurrence joined,
so repeats never recompute an LCS.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from ..errors import ConfigurationError
from ..model import PLACEHOLDER, LogRecord, ParseResult
from . import check_parameters, result_from_clusters

DEFAULTS = {"acceptance_ratio": 0.5}


def lcs(a: list[str], b: list[str]) -> list[str]:
    """Longest common subsequence of two token lists."""
    la, lb = len(a), len(b)
    lengths = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la):
        row = lengths[i]
        nxt = lengths[i + 1]
        ai = a[i]
        for j in range(lb):
            if ai == b[j]:
                nxt[j + 1] = row[j] + 1
            else:
                left = nxt[j]
                up = row[j + 1]
                nxt[j + 1] = left if left >= up else up
    out: list[str] = []
    i, j = la, lb
    while i and j:
        if lengths[i][j] == lengths[i - 1][j]:
            i -= 1
        elif lengths[i][j] == lengths[i][j - 1]:
            j -= 1
        else:
            out.append(a[i - 1])
            i -= 1
            j -= 1
    out.reverse()
    return out


def merge_skeleton(a: list[str], b: list[str], common: list[str]) -> list[str]:
    """Skeleton of two aligned token lists: the common subsequence with one
    ``<*>`` per gap (a stretch where either list has unshared tokens).

    Both lists are consumed greedily against ``common``, which must be a
    subsequence of each (an LCS of the two always is).
    """
    out: list[str] = []
    i = j = 0
    for token in common:
        gap = False
        while a[i] != token:
            gap = True
            i += 1
        while b[j] != token:
            gap = True
            j += 1
        if gap:
            out.append(PLACEHOLDER)
        out.append(token)
        i += 1
        j += 1
    if i < len(a) or j < len(b):
        out.append(PLACEHOLDER)
    return out


class _Cluster:
    __slots__ = ("template", "line_ids", "vocabulary")

    def __init__(self, template: list[str], line_id: int):
        self.template = template
        self.line_ids = [line_id]
        self.vocabulary = Counter(template)


class SpellParser:
    """LCS-based streaming parser with a configurable acceptance ratio."""

    PARAMETER_DEFAULTS = DEFAULTS

    def __init__(self, acceptance_ratio: float = 0.5):
        params = check_parameters(
            "spell", DEFAULTS, {"acceptance_ratio": acceptance_ratio}
        )
        if not 0 < params["acceptance_ratio"] <= 1:
            raise ConfigurationError("spell: acceptance_ratio must be in (0, 1]")
        self.tau = params["acceptance_ratio"]
        self._clusters: list[_Cluster] = []
        self._by_content: dict[str, _Cluster] = {}

    def _find(self, tokens: list[str]) -> tuple[_Cluster | None, list[str]]:
        counts = Counter(tokens)
        need = self.tau * len(tokens)
        best: _Cluster | None = None
        best_lcs: list[str] = []
        for cluster in self._clusters:
            # Shared multiset size bounds the LCS length from above.
            bound = sum((counts & cluster.vocabulary).values())
            if bound < need or bound < len(best_lcs):
                continue
            common = lcs(tokens, cluster.template)
            if len(common) > len(best_lcs) or (
                best is not None
                and len(common) == len(best_lcs)
                and len(cluster.template) < len(best.template)
            ):
                best = cluster
                best_lcs = common
        if best is not None and len(best_lcs) >= need:
            return best, best_lcs
        return None, []

    def parse(self, records: Iterable[LogRecord]) -> ParseResult:
        for record in records:
            cached = self._by_content.get(record.content)
            if cached is not None:
                cached.line_ids.append(record.line_id)
                continue
            tokens = record.content.split()
            cluster, common = self._find(tokens)
            if cluster is None:
                cluster = _Cluster(list(tokens), record.line_id)
                self._clusters.append(cluster)
            else:
                cluster.line_ids.append(record.line_id)
                skeleton = merge_skeleton(cluster.template, tokens, common)
                if skeleton != cluster.template:
                    cluster.template = skeleton
                    cluster.vocabulary = Counter(skeleton)
            self._by_content[record.content] = cluster
        return result_from_clusters(
            (" ".join(c.template), c.line_ids) for c in self._clusters
        )
