"""Hierarchical coarse grouping of log records.

Records are partitioned first by (level, component), then by the set of
their K most frequent tokens with stop words excluded.  Messages sharing a
template almost always land in one group because the template's constant
tokens dominate the dataset-wide frequency ranking while parameter values
are rare.  Within each group records are kept in lexicographic content
order, the order annotators review them in.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .ingest import Corpus, DatasetManifest
from .model import DEFAULT_DELIMITERS, LogRecord, tokenize
from .stopwords import DEFAULT_STOP_WORDS


@dataclass(frozen=True, slots=True)
class GroupKey:
    """Partition cell: (level, component, sorted top-K tokens).

    Missing level/component stay ``None`` and form their own cell.
    """

    level: str | None
    component: str | None
    top_tokens: tuple[str, ...]

    def sort_key(self) -> tuple[str, str, tuple[str, ...]]:
        return (self.level or "", self.component or "", self.top_tokens)


@dataclass(frozen=True)
class GroupedCorpus:
    """Groups partitioning the corpus line ids, plus the token counts used."""

    groups: Mapping[GroupKey, tuple[int, ...]]
    token_frequencies: Mapping[str, int]


def build_stop_words(extra: tuple[str, ...] | list[str] = ()) -> frozenset[str]:
    """Bundled stop words plus manifest-supplied extras, lowercased."""
    return DEFAULT_STOP_WORDS | frozenset(w.lower() for w in extra)


def token_frequencies(
    corpus: Corpus, delimiters: frozenset[str] | str = DEFAULT_DELIMITERS
) -> dict[str, int]:
    """Multiplicity-weighted token counts over all record contents."""
    counts: Counter[str] = Counter()
    for record in corpus.records:
        weight = record.multiplicity
        for token in tokenize(record.content, delimiters):
            counts[token] += weight
    return dict(counts)


def top_k_tokens(
    record: LogRecord,
    freqs: Mapping[str, int],
    k: int,
    stop_words: frozenset[str],
    delimiters: frozenset[str] | str = DEFAULT_DELIMITERS,
) -> tuple[str, ...]:
    """The record's k highest-frequency tokens, stop words excluded.

    Frequency ties break lexicographically; fewer than k eligible tokens
    returns them all.  Result is sorted lexicographically (it is a set-like
    grouping key, not a ranking).
    """
    candidates = {
        t for t in tokenize(record.content, delimiters)
        if t.lower() not in stop_words
    }
    ranked = sorted(candidates, key=lambda t: (-freqs.get(t, 0), t))
    return tuple(sorted(ranked[:k]))


def coarse_group(
    corpus: Corpus,
    manifest: DatasetManifest,
    stop_words: frozenset[str] | None = None,
) -> GroupedCorpus:
    """Partition a cleaned, deduplicated corpus into annotation groups."""
    if stop_words is None:
        stop_words = build_stop_words(manifest.stop_words_extra)
    delimiters = (
        frozenset(manifest.delimiters) if manifest.delimiters else DEFAULT_DELIMITERS
    )
    freqs = token_frequencies(corpus, delimiters)
    k = manifest.grouping_k

    buckets: dict[GroupKey, list[int]] = {}
    content_of: dict[int, str] = {}
    for record in corpus.records:
        key = GroupKey(
            level=record.level,
            component=record.component,
            top_tokens=top_k_tokens(record, freqs, k, stop_words, delimiters),
        )
        buckets.setdefault(key, []).append(record.line_id)
        content_of[record.line_id] = record.content

    groups: dict[GroupKey, tuple[int, ...]] = {}
    for key in sorted(buckets, key=GroupKey.sort_key):
        members = sorted(buckets[key], key=lambda lid: (content_of[lid], lid))
        groups[key] = tuple(members)
    return GroupedCorpus(groups=groups, token_frequencies=freqs)


def group_file_name(key: GroupKey) -> str:
    """Stable file name for a group's dump, derived from its key."""
    digest = hashlib.sha1(
        json.dumps([key.level, key.component, list(key.top_tokens)]).encode("utf-8")
    ).hexdigest()
    return digest[:16]


def dump_groups(
    grouped: GroupedCorpus, corpus: Corpus, out_dir: str | Path
) -> dict[str, GroupKey]:
    """Write one text file per group (sorted contents) plus an index.

    This is the artifact annotators review: <out_dir>/<keyhash>.txt holds
    the group's contents in lexicographic order; index.json maps each file
    back to its key.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    content_of = {r.line_id: r.content for r in corpus.records}
    index: dict[str, GroupKey] = {}
    for key, line_ids in grouped.groups.items():
        name = group_file_name(key)
        index[name] = key
        with (out_dir / f"{name}.txt").open("w", encoding="utf-8") as handle:
            for line_id in line_ids:
                handle.write(content_of[line_id])
                handle.write("\n")
    with (out_dir / "index.json").open("w", encoding="utf-8") as handle:
        json.dump(
            {
                name: {
                    "level": key.level,
                    "component": key.component,
                    "top_tokens": list(key.top_tokens),
                    "size": len(grouped.groups[key]),
                }
                for name, key in sorted(index.items())
            },
            handle,
            indent=2,
            sort_keys=True,
        )
    return index
