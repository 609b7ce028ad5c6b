"""Reference statistic-based parsers behind one uniform contract.

A parser consumes an ordered stream of :class:`~logbench.model.LogRecord`
and produces a :class:`~logbench.model.ParseResult`: a total line→template
assignment with no orphan templates.  Three parsers ship in-tree — a
fixed-depth parse-tree parser, an LCS streaming parser, and a token
frequency baseline — and anything else integrates through the external
adapter (see :mod:`logbench.parsers.external`), which the bench runner
treats as a black box with a wall-clock budget.

All in-tree parsers are multiplicity-aware: a record standing for n
identical lines parses exactly as n separate records would.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Protocol

from ..errors import ConfigurationError
from ..model import LogRecord, ParseResult, catalog_from_texts, normalize_template

__all__ = [
    "ParserConfig",
    "StreamParser",
    "available_parsers",
    "create_parser",
    "result_from_clusters",
]


class StreamParser(Protocol):
    """Single-threaded, stateful over one stream; one instance per run."""

    def parse(self, records: Iterable[LogRecord]) -> ParseResult: ...


@dataclass(frozen=True)
class ParserConfig:
    """Named parser plus its tuning parameters.

    Unknown parameter names are rejected when the parser is created, not at
    run time.  ``nondeterministic`` tells the bench runner to repeat runs
    and report medians; the in-tree parsers are all deterministic.
    """

    name: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int | None = None
    nondeterministic: bool = False

    @property
    def label(self) -> str:
        return self.name


def result_from_clusters(
    clusters: Iterable[tuple[str, Iterable[int]]]
) -> ParseResult:
    """(template text, line ids) pairs → ParseResult.

    Texts are normalized and identical texts merge into one produced
    template, keeping the catalog free of duplicates.
    """
    texts: dict[int, str] = {}
    for text, line_ids in clusters:
        normalized = normalize_template(text)
        for line_id in line_ids:
            texts[line_id] = normalized
    catalog, assignment = catalog_from_texts(texts)
    return ParseResult(templates=catalog, assignment=assignment)


def check_parameters(
    name: str, defaults: Mapping[str, Any], overrides: Mapping[str, Any]
) -> dict[str, Any]:
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigurationError(
            f"parser {name!r} got unknown parameter(s) {sorted(unknown)}; "
            f"known: {sorted(defaults)}"
        )
    merged = dict(defaults)
    merged.update(overrides)
    return merged


def available_parsers() -> dict[str, type]:
    from .drain import DrainParser
    from .external import ExternalParser
    from .lfa import LfaParser
    from .spell import SpellParser

    return {
        "drain": DrainParser,
        "spell": SpellParser,
        "lfa": LfaParser,
        "external": ExternalParser,
    }


def create_parser(config: ParserConfig):
    """Instantiate the parser a config names, validating its parameters."""
    registry = available_parsers()
    cls = registry.get(config.name)
    if cls is None:
        raise ConfigurationError(
            f"unknown parser {config.name!r}; available: {sorted(registry)}"
        )
    params = check_parameters(
        config.name, cls.PARAMETER_DEFAULTS, config.parameters
    )
    return cls(**params)
