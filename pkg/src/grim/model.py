"""Domain model for branching narratives.

A StoryBundle is the parsed form of one generated narrative document: a
master list of beats, the storylines that walk through them, and the start
and ending pointers. Bundles are value objects; equality ignores the raw
source text they were parsed from.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

__all__ = [
    "Beat",
    "Storyline",
    "GenerationSpec",
    "StoryBundle",
    "EditSet",
    "NarrativeGraph",
    "normalize_description",
    "storyline_transitions",
    "merge_transitions",
    "node_sort_key",
]

from .errors import DanglingBeatRef

_WS = re.compile(r"\s+")


def normalize_description(text: str) -> str:
    """Collapse whitespace and case for loose description matching."""
    return _WS.sub(" ", text.strip()).lower().rstrip(".")


@dataclass(frozen=True)
class Beat:
    id: int
    description: str


@dataclass(frozen=True)
class Storyline:
    """One playable path: START label, ordered beat ids, END label."""

    index: int
    start_label: str
    beat_ids: tuple[int, ...]
    end_label: str


@dataclass(frozen=True)
class GenerationSpec:
    """The knobs a narrative is generated from."""

    story: str
    setting: str
    n_starts: int
    n_endings: int
    n_storylines: int

    def to_dict(self) -> dict:
        return {
            "story": self.story,
            "setting": self.setting,
            "n_starts": self.n_starts,
            "n_endings": self.n_endings,
            "n_storylines": self.n_storylines,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationSpec":
        return cls(
            story=d["story"],
            setting=d["setting"],
            n_starts=int(d["n_starts"]),
            n_endings=int(d["n_endings"]),
            n_storylines=int(d["n_storylines"]),
        )


@dataclass(frozen=True)
class StoryBundle:
    """Parsed narrative document.

    ``starts`` and ``ends`` map pointer labels (``START_1``, ``END_2``) to
    beat ids. ``declared_common_beats`` is what the document claims; the
    validator computes its own set independently.
    """

    spec: GenerationSpec
    beats: tuple[Beat, ...]
    storylines: tuple[Storyline, ...]
    starts: dict[str, int] = field(default_factory=dict)
    ends: dict[str, int] = field(default_factory=dict)
    declared_common_beats: tuple[int, ...] = ()
    raw_text: str = field(default="", compare=False)

    def beat_map(self) -> dict[int, Beat]:
        return {b.id: b for b in self.beats}

    def beat_ids(self) -> set[int]:
        return {b.id for b in self.beats}

    def storyline(self, index: int) -> Storyline:
        for s in self.storylines:
            if s.index == index:
                return s
        raise KeyError(index)

    def with_raw_text(self, text: str) -> "StoryBundle":
        return replace(self, raw_text=text)


@dataclass(frozen=True)
class EditSet:
    """A structured delta between two bundle versions.

    ``nodes_added`` pairs new beat ids with their descriptions;
    edge tuples are (src, dst) where either side may be a pointer label.
    """

    nodes_added: tuple[Beat, ...] = ()
    nodes_deleted: tuple[int, ...] = ()
    edges_added: tuple[tuple, ...] = ()
    edges_deleted: tuple[tuple, ...] = ()

    def is_empty(self) -> bool:
        return not (
            self.nodes_added
            or self.nodes_deleted
            or self.edges_added
            or self.edges_deleted
        )

    def to_dict(self) -> dict:
        return {
            "nodes_added": [
                {"id": b.id, "description": b.description} for b in self.nodes_added
            ],
            "nodes_deleted": list(self.nodes_deleted),
            "edges_added": [list(e) for e in self.edges_added],
            "edges_deleted": [list(e) for e in self.edges_deleted],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EditSet":
        return cls(
            nodes_added=tuple(
                Beat(int(n["id"]), str(n["description"]))
                for n in d.get("nodes_added", [])
            ),
            nodes_deleted=tuple(int(i) for i in d.get("nodes_deleted", [])),
            edges_added=tuple(
                (_coerce_endpoint(e[0]), _coerce_endpoint(e[1]))
                for e in d.get("edges_added", [])
            ),
            edges_deleted=tuple(
                (_coerce_endpoint(e[0]), _coerce_endpoint(e[1]))
                for e in d.get("edges_deleted", [])
            ),
        )


def _coerce_endpoint(v):
    """Edge endpoints are beat ids (int) or pointer labels (str)."""
    if isinstance(v, int):
        return v
    s = str(v)
    return int(s) if s.lstrip("-").isdigit() else s


def storyline_transitions(line: Storyline) -> list[tuple]:
    """Ordered transition list for one storyline, pointers included.

    START_k -> first beat, consecutive beat pairs, last beat -> END_k.
    Empty storylines produce START -> END directly.
    """
    if not line.beat_ids:
        return [(line.start_label, line.end_label)]
    out: list[tuple] = [(line.start_label, line.beat_ids[0])]
    for a, b in zip(line.beat_ids, line.beat_ids[1:]):
        out.append((a, b))
    out.append((line.beat_ids[-1], line.end_label))
    return out


@dataclass(frozen=True)
class NarrativeGraph:
    """Merged directed graph over every storyline's transitions."""

    beat_nodes: frozenset
    start_nodes: frozenset
    end_nodes: frozenset
    edges: frozenset

    def beat_edges(self) -> set:
        """Edges between beat nodes only (dummy endpoints dropped)."""
        return {
            (u, v)
            for u, v in self.edges
            if isinstance(u, int) and isinstance(v, int)
        }


def merge_transitions(bundle: StoryBundle) -> NarrativeGraph:
    """Union of all storyline transitions, deduplicated.

    Raises DanglingBeatRef if any storyline uses a beat id that has no
    description in the master list.
    """
    known = bundle.beat_ids()
    edges: set = set()
    beat_nodes: set = set()
    start_nodes: set = set()
    end_nodes: set = set()
    for line in bundle.storylines:
        for bid in line.beat_ids:
            if bid not in known:
                raise DanglingBeatRef(
                    f"storyline {line.index} references undescribed beat {bid}"
                )
        beat_nodes.update(line.beat_ids)
        start_nodes.add(line.start_label)
        end_nodes.add(line.end_label)
        edges.update(storyline_transitions(line))
    return NarrativeGraph(
        beat_nodes=frozenset(beat_nodes),
        start_nodes=frozenset(start_nodes),
        end_nodes=frozenset(end_nodes),
        edges=frozenset(edges),
    )


_PTR = re.compile(r"^(START|END)_(\d+)$")


def node_sort_key(node) -> tuple:
    """Canonical node ordering: beats ascending, then STARTs, then ENDs."""
    if isinstance(node, int):
        return (0, node, 0)
    m = _PTR.match(str(node))
    if m:
        rank = 1 if m.group(1) == "START" else 2
        return (rank, int(m.group(2)), 0)
    return (3, 0, 0)
