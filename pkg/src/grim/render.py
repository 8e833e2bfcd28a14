"""Render payload construction: the NODES/EDGES objects the browser eats.

The deterministic builder here is the source of truth; payloads coming
back from a model are parsed, checked against the same invariants, and
reconciled against the built oracle.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field

from .errors import Diagnostic, GrimError, Severity
from .model import StoryBundle, merge_transitions, normalize_description

__all__ = [
    "PayloadError",
    "RenderPayload",
    "ReconcileReport",
    "build_render_payload",
    "serialize_render_payload",
    "parse_render_payload",
    "reconcile",
]

GAME_STATE = "None"


class PayloadError(GrimError):
    code = "PAYLOAD-MALFORMED"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code:
            self.code = code


def beat_key(beat_id: int) -> str:
    return f"Beat_{beat_id}"


def node_label(node) -> str:
    return beat_key(node) if isinstance(node, int) else str(node)


_KEY = re.compile(r"^(Beat|START|END)_(\d+)$")


def _key_sort(key: str) -> tuple:
    m = _KEY.match(key)
    if not m:
        return (3, 0, key)
    rank = {"Beat": 0, "START": 1, "END": 2}[m.group(1)]
    return (rank, int(m.group(2)), "")


@dataclass
class RenderPayload:
    """nodes: key -> [[game_state, nr_beat, beat, pathway]];
    edges: key -> [incoming pair list, outgoing pair list]."""

    nodes: dict[str, list] = field(default_factory=dict)
    edges: dict[str, list] = field(default_factory=dict)

    def node_ids(self) -> list[str]:
        return list(self.nodes)

    def edge_pairs(self) -> set[tuple[str, str]]:
        pairs: set[tuple[str, str]] = set()
        for incoming, outgoing in self.edges.values():
            for src, dst in outgoing:
                pairs.add((src, dst))
            for src, dst in incoming:
                pairs.add((src, dst))
        return pairs

    def beat_descriptions(self) -> dict[int, str]:
        out: dict[int, str] = {}
        for entry in self.nodes.values():
            state = entry[0]
            if state[1] is not None:
                out[int(state[1])] = state[2]
        return out

    def to_document(self) -> dict:
        return {"NODES": self.nodes, "EDGES": self.edges}

    @classmethod
    def from_document(cls, doc: dict) -> "RenderPayload":
        return cls(nodes=dict(doc["NODES"]), edges=dict(doc["EDGES"]))


def build_render_payload(bundle: StoryBundle) -> RenderPayload:
    """Deterministic payload for a bundle.

    Node key order: beats ascending, then START_k, then END_k. A beat's
    pathway is the smallest storyline index routing through it.
    """
    graph = merge_transitions(bundle)
    pathway: dict[int, int] = {}
    for s in sorted(bundle.storylines, key=lambda s: s.index):
        for bid in s.beat_ids:
            pathway.setdefault(bid, s.index)

    keys: list[tuple] = [(bid, beat_key(bid)) for bid in sorted(bundle.beat_ids())]
    keys += [(None, lbl) for lbl in sorted(bundle.starts, key=_key_sort)]
    keys += [(None, lbl) for lbl in sorted(bundle.ends, key=_key_sort)]

    beat_map = bundle.beat_map()
    nodes: dict[str, list] = {}
    for bid, key in keys:
        if bid is None:
            nodes[key] = [[GAME_STATE, None, None, None]]
        else:
            way = str(pathway[bid]) if bid in pathway else None
            nodes[key] = [[GAME_STATE, bid, beat_map[bid].description, way]]

    labeled = sorted(
        ((node_label(u), node_label(v)) for u, v in graph.edges),
        key=lambda p: (node_sort_key_from_label(p[0]), node_sort_key_from_label(p[1])),
    )
    edges: dict[str, list] = {}
    for _, key in keys:
        incoming = [[u, v] for u, v in labeled if v == key]
        outgoing = [[u, v] for u, v in labeled if u == key]
        edges[key] = [incoming, outgoing]
    return RenderPayload(nodes=nodes, edges=edges)


def node_sort_key_from_label(label: str) -> tuple:
    return _key_sort(label)


def serialize_render_payload(payload: RenderPayload) -> str:
    return json.dumps(payload.to_document(), indent=2, ensure_ascii=False) + "\n"


def _extract_object(text: str, marker: str) -> dict | None:
    """Find 'MARKER' and brace-match the JSON object that follows it."""
    pos = 0
    while True:
        hit = text.find(marker, pos)
        if hit < 0:
            return None
        brace = text.find("{", hit)
        if brace < 0:
            return None
        depth = 0
        in_str = False
        escaped = False
        for i in range(brace, len(text)):
            ch = text[i]
            if in_str:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_str = False
                continue
            if ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(text[brace:i + 1])
                    except json.JSONDecodeError:
                        pos = hit + len(marker)
                        break
        else:
            return None


def parse_render_payload(text: str) -> tuple[RenderPayload, list[Diagnostic]]:
    """Parse a NODES/EDGES answer, labeled blocks or one JSON document.

    Raises PayloadError (PAYLOAD-MALFORMED, PAYLOAD-KEYSET-MISMATCH,
    PAYLOAD-ASYMMETRIC-EDGE); START/END keys out of place are repaired
    and reported as a PAYLOAD-DUMMY-ORDER warning.
    """
    nodes = _extract_object(text, "NODES")
    edges = _extract_object(text, "EDGES")
    if nodes is None or edges is None:
        try:
            doc = json.loads(text)
            nodes = doc.get("NODES")
            edges = doc.get("EDGES")
        except (json.JSONDecodeError, AttributeError):
            pass
    if not isinstance(nodes, dict) or not isinstance(edges, dict):
        raise PayloadError("could not locate NODES and EDGES objects in the text")

    warnings: list[Diagnostic] = []
    norm_nodes: dict[str, list] = {}
    for key, value in nodes.items():
        if (
            not isinstance(value, list)
            or len(value) != 1
            or not isinstance(value[0], list)
            or len(value[0]) != 4
        ):
            raise PayloadError(
                f"node {key!r} does not have the [[game_state, nr_beat, beat, "
                f"pathway]] shape"
            )
        norm_nodes[str(key)] = value

    norm_edges: dict[str, list] = {}
    for key, value in edges.items():
        if isinstance(value, dict):
            # tolerate the {"None": [in, out]} wrapping some emitters use
            if len(value) == 1:
                value = next(iter(value.values()))
            else:
                raise PayloadError(f"edge entry {key!r} has an ambiguous wrapper")
        if not isinstance(value, list) or len(value) != 2:
            raise PayloadError(
                f"edge entry {key!r} is not an [incoming, outgoing] pair of lists"
            )
        incoming, outgoing = value
        for side in (incoming, outgoing):
            if not isinstance(side, list) or any(
                not isinstance(p, list) or len(p) != 2 for p in side
            ):
                raise PayloadError(f"edge entry {key!r} has a malformed pair list")
        norm_edges[str(key)] = [
            [[str(a), str(b)] for a, b in incoming],
            [[str(a), str(b)] for a, b in outgoing],
        ]

    node_keys = set(norm_nodes)
    edge_keys = set(norm_edges)
    if node_keys != edge_keys:
        diff = sorted(node_keys.symmetric_difference(edge_keys))
        raise PayloadError(
            f"NODES and EDGES key sets differ on {diff}",
            code="PAYLOAD-KEYSET-MISMATCH",
        )

    out_pairs: set[tuple[str, str]] = set()
    in_pairs: set[tuple[str, str]] = set()
    for key, (incoming, outgoing) in norm_edges.items():
        for src, dst in outgoing:
            if src != key:
                raise PayloadError(
                    f"outgoing pair ({src}, {dst}) listed under {key!r}",
                    code="PAYLOAD-ASYMMETRIC-EDGE",
                )
            out_pairs.add((src, dst))
        for src, dst in incoming:
            if dst != key:
                raise PayloadError(
                    f"incoming pair ({src}, {dst}) listed under {key!r}",
                    code="PAYLOAD-ASYMMETRIC-EDGE",
                )
            in_pairs.add((src, dst))
    for src, dst in sorted(out_pairs.symmetric_difference(in_pairs)):
        raise PayloadError(
            f"edge ({src}, {dst}) is not mirrored on both endpoints",
            code="PAYLOAD-ASYMMETRIC-EDGE",
        )
    unknown = {n for pair in out_pairs for n in pair} - node_keys
    if unknown:
        raise PayloadError(
            f"edges reference nodes missing from NODES: {sorted(unknown)}",
            code="PAYLOAD-KEYSET-MISMATCH",
        )

    ordered = list(norm_nodes)
    canonical = sorted(ordered, key=_key_sort)
    dummy_seen = False
    misordered = False
    for key in ordered:
        if _key_sort(key)[0] in (1, 2):
            dummy_seen = True
        elif dummy_seen:
            misordered = True
            break
    if misordered:
        warnings.append(
            Diagnostic(
                Severity.WARNING,
                "PAYLOAD-DUMMY-ORDER",
                "START/END entries were not last; keys reordered canonically",
            )
        )
        ordered = canonical
    return (
        RenderPayload(
            nodes={k: norm_nodes[k] for k in ordered},
            edges={k: norm_edges[k] for k in ordered},
        ),
        warnings,
    )


@dataclass
class ReconcileReport:
    missing_edges: list[tuple[str, str]] = field(default_factory=list)
    extra_edges: list[tuple[str, str]] = field(default_factory=list)
    missing_nodes: list[str] = field(default_factory=list)
    extra_nodes: list[str] = field(default_factory=list)
    description_mismatches: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (
            self.missing_edges
            or self.extra_edges
            or self.missing_nodes
            or self.extra_nodes
            or self.description_mismatches
        )

    def to_dict(self) -> dict:
        return {
            "missing_edges": [list(e) for e in self.missing_edges],
            "extra_edges": [list(e) for e in self.extra_edges],
            "missing_nodes": list(self.missing_nodes),
            "extra_nodes": list(self.extra_nodes),
            "description_mismatches": [list(m) for m in self.description_mismatches],
        }


def reconcile(candidate: RenderPayload,
              bundle: StoryBundle) -> tuple[ReconcileReport, RenderPayload]:
    """Diff a candidate payload against the deterministic oracle.

    The repaired payload keeps the oracle's structure, adopting the
    candidate's description text for any beat number both sides know.
    """
    oracle = build_render_payload(bundle)
    o_nodes, c_nodes = set(oracle.nodes), set(candidate.nodes)
    o_edges, c_edges = oracle.edge_pairs(), candidate.edge_pairs()

    report = ReconcileReport(
        missing_edges=sorted(o_edges - c_edges, key=lambda p: tuple(map(_key_sort, p))),
        extra_edges=sorted(c_edges - o_edges, key=lambda p: tuple(map(_key_sort, p))),
        missing_nodes=sorted(o_nodes - c_nodes, key=_key_sort),
        extra_nodes=sorted(c_nodes - o_nodes, key=_key_sort),
    )

    cand_desc = candidate.beat_descriptions()
    repaired = RenderPayload(
        nodes=copy.deepcopy(oracle.nodes), edges=copy.deepcopy(oracle.edges)
    )
    for key, entry in repaired.nodes.items():
        nr = entry[0][1]
        if nr is None or nr not in cand_desc:
            continue
        ours = entry[0][2]
        theirs = cand_desc[nr]
        if normalize_description(ours) != normalize_description(theirs):
            report.description_mismatches.append((key, ours, theirs))
        entry[0][2] = theirs
    return report, repaired
