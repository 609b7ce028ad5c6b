"""Fixed-depth parse-tree parser.

Messages are routed through a tree keyed first by token count, then by
their leading tokens down to a fixed depth; each leaf holds clusters whose
templates are merged position-wise, with ``<*>`` wherever cluster members
disagree.  Tokens containing digits never become tree nodes (they are
almost always parameters), and a node's fan-out is capped, overflow going
to a wildcard child.
"""

from __future__ import annotations

from typing import Iterable

from ..errors import ConfigurationError
from ..model import PLACEHOLDER, LogRecord, ParseResult
from . import check_parameters, result_from_clusters

DEFAULTS = {
    "depth": 4,
    "similarity_threshold": 0.4,
    "max_children": 100,
}


class _Cluster:
    __slots__ = ("template", "line_ids")

    def __init__(self, template: list[str], line_id: int):
        self.template = template
        self.line_ids = [line_id]


class _Node:
    __slots__ = ("children",)

    def __init__(self):
        self.children: dict = {}


def _has_digit(token: str) -> bool:
    return any(ch.isdigit() for ch in token)


class DrainParser:
    """Heuristic tree parser (fixed depth, similarity-gated leaf merge)."""

    PARAMETER_DEFAULTS = DEFAULTS

    def __init__(self, depth: int = 4, similarity_threshold: float = 0.4,
                 max_children: int = 100):
        params = check_parameters("drain", DEFAULTS, {
            "depth": depth,
            "similarity_threshold": similarity_threshold,
            "max_children": max_children,
        })
        if params["depth"] < 3:
            raise ConfigurationError("drain: depth must be >= 3")
        if not 0 < params["similarity_threshold"] <= 1:
            raise ConfigurationError(
                "drain: similarity_threshold must be in (0, 1]"
            )
        if params["max_children"] < 2:
            raise ConfigurationError("drain: max_children must be >= 2")
        # Two levels are taken by the root and the token-count layer.
        self.inner_depth = params["depth"] - 2
        self.st = params["similarity_threshold"]
        self.max_children = params["max_children"]
        self._root: dict[int, _Node] = {}
        self._clusters: list[_Cluster] = []

    # -- tree navigation ----------------------------------------------------

    def _leaf_for(self, tokens: list[str]) -> list[_Cluster] | None:
        node = self._root.get(len(tokens))
        if node is None:
            return None
        depth = 1
        for token in tokens:
            if depth >= self.inner_depth or depth > len(tokens):
                break
            children = node.children
            if token in children:
                node = children[token]
            elif PLACEHOLDER in children:
                node = children[PLACEHOLDER]
            else:
                return None
            depth += 1
        return node.children.get(None)

    def _insert(self, cluster: _Cluster) -> None:
        tokens = cluster.template
        node = self._root.setdefault(len(tokens), _Node())
        depth = 1
        for token in tokens:
            if depth >= self.inner_depth or depth > len(tokens):
                break
            children = node.children
            if token in children:
                node = children[token]
            elif _has_digit(token):
                node = children.setdefault(PLACEHOLDER, _Node())
            elif PLACEHOLDER in children:
                if len(children) < self.max_children:
                    node = children.setdefault(token, _Node())
                else:
                    node = children[PLACEHOLDER]
            else:
                if len(children) + 1 < self.max_children:
                    node = children.setdefault(token, _Node())
                else:
                    node = children.setdefault(PLACEHOLDER, _Node())
            depth += 1
        node.children.setdefault(None, []).append(cluster)

    # -- leaf matching ------------------------------------------------------

    def _best_match(self, leaf: list[_Cluster], tokens: list[str]) -> _Cluster | None:
        best = None
        best_sim = -1.0
        best_params = -1
        for cluster in leaf:
            sim, params = self._similarity(cluster.template, tokens)
            if sim > best_sim or (sim == best_sim and params > best_params):
                best_sim = sim
                best_params = params
                best = cluster
        if best is not None and best_sim >= self.st:
            return best
        return None

    @staticmethod
    def _similarity(template: list[str], tokens: list[str]) -> tuple[float, int]:
        same = 0
        params = 0
        for a, b in zip(template, tokens):
            if a == PLACEHOLDER:
                params += 1
            elif a == b:
                same += 1
        return same / len(template), params

    @staticmethod
    def _merge(template: list[str], tokens: list[str]) -> list[str]:
        return [a if a == b else PLACEHOLDER for a, b in zip(template, tokens)]

    # -- public contract ----------------------------------------------------

    def parse(self, records: Iterable[LogRecord]) -> ParseResult:
        for record in records:
            tokens = record.content.split()
            leaf = self._leaf_for(tokens)
            cluster = self._best_match(leaf, tokens) if leaf else None
            if cluster is None:
                cluster = _Cluster(list(tokens), record.line_id)
                self._clusters.append(cluster)
                self._insert(cluster)
            else:
                cluster.line_ids.append(record.line_id)
                merged = self._merge(cluster.template, tokens)
                if merged != cluster.template:
                    cluster.template = merged
        return result_from_clusters(
            (" ".join(c.template), c.line_ids) for c in self._clusters
        )
