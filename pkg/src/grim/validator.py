"""Structural constraint checks over a parsed StoryBundle.

Every machine-checkable generation constraint is one coded check. Default
severities follow the principle that checks the generator's own exemplar
output violates must warn, not fail.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import Severity, Violation
from .model import GenerationSpec, StoryBundle, merge_transitions

__all__ = [
    "DEFAULT_SEVERITIES",
    "ValidationReport",
    "longest_common_run",
    "computed_common_beats",
    "validate",
]

DEFAULT_SEVERITIES: dict[str, Severity] = {
    "V-COUNT-STORYLINES": Severity.ERROR,
    "V-STARTS": Severity.ERROR,
    "V-ENDS": Severity.ERROR,
    "V-BEAT-BUDGET": Severity.ERROR,
    "V-RUN-LENGTH": Severity.ERROR,
    "V-SIMPLE-PATH": Severity.ERROR,
    "V-DUPLICATE-STORYLINE": Severity.ERROR,
    "V-COMMON-COUNT": Severity.WARNING,
    "V-COMMON-CONSECUTIVE": Severity.WARNING,
    "V-COMMON-DECLARED-MISMATCH": Severity.WARNING,
    "V-CYCLE": Severity.WARNING,
}

MAX_COMMON_RUN = 3


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity is Severity.ERROR]

    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity is Severity.WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors()

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "violations": [v.to_dict() for v in self.violations],
            "stats": dict(self.stats),
        }


def longest_common_run(a, b) -> tuple[int, int, int]:
    """Longest common contiguous run of two sequences.

    Returns (length, start in a, start in b); ties resolve to the earliest
    start in a, then the earliest in b. (0, 0, 0) when nothing is shared.
    """
    a = list(a)
    b = list(b)
    best = (0, 0, 0)
    prev = [0] * (len(b) + 1)
    for i, x in enumerate(a):
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b):
            if x == y:
                run = prev[j] + 1
                cur[j + 1] = run
                if run > best[0]:
                    best = (run, i - run + 1, j - run + 1)
        prev = cur
    return best


def computed_common_beats(bundle: StoryBundle) -> set[int]:
    """Beat ids present in every storyline."""
    sets = [set(s.beat_ids) for s in bundle.storylines]
    if not sets:
        return set()
    out = sets[0]
    for s in sets[1:]:
        out = out & s
    return out


def validate(bundle: StoryBundle,
             spec: GenerationSpec | None = None,
             severities: dict[str, Severity] | None = None) -> ValidationReport:
    """Run every check; always returns a report, never raises."""
    spec = spec or bundle.spec
    sev = dict(DEFAULT_SEVERITIES)
    if severities:
        sev.update(severities)
    out: list[Violation] = []

    def hit(code: str, message: str, subjects: tuple = ()):
        out.append(Violation(sev[code], code, message, subjects))

    lines = sorted(bundle.storylines, key=lambda s: s.index)

    if len(lines) != spec.n_storylines:
        hit(
            "V-COUNT-STORYLINES",
            f"expected {spec.n_storylines} storylines, found {len(lines)}",
        )

    start_beats = [bundle.starts[k] for k in sorted(bundle.starts)]
    if len(bundle.starts) != spec.n_starts or len(set(start_beats)) != len(start_beats):
        hit(
            "V-STARTS",
            f"expected {spec.n_starts} starts pointing to distinct beats, "
            f"found {len(bundle.starts)} pointing to {start_beats}",
            tuple(sorted(set(start_beats))),
        )
    end_beats = [bundle.ends[k] for k in sorted(bundle.ends)]
    if len(bundle.ends) != spec.n_endings or len(set(end_beats)) != len(end_beats):
        hit(
            "V-ENDS",
            f"expected {spec.n_endings} endings pointed from distinct beats, "
            f"found {len(bundle.ends)} pointed from {end_beats}",
            tuple(sorted(set(end_beats))),
        )

    budget = 2 * spec.n_storylines
    if len(bundle.beats) < budget:
        hit(
            "V-BEAT-BUDGET",
            f"{len(bundle.beats)} unique beats < twice the storyline count ({budget})",
        )

    max_run = 0
    for i_pos, a in enumerate(lines):
        for b in lines[i_pos + 1:]:
            run, pa, pb = longest_common_run(a.beat_ids, b.beat_ids)
            max_run = max(max_run, run)
            if run > MAX_COMMON_RUN:
                shared = list(a.beat_ids[pa:pa + run])
                hit(
                    "V-RUN-LENGTH",
                    f"storylines {a.index} and {b.index} share a run of "
                    f"{run} beats {shared} (limit {MAX_COMMON_RUN})",
                    (a.index, b.index),
                )

    for s in lines:
        counts = Counter(s.beat_ids)
        repeats = sorted(b for b, n in counts.items() if n > 1)
        if repeats:
            hit(
                "V-SIMPLE-PATH",
                f"storyline {s.index} repeats beats {repeats}",
                (s.index,),
            )

    by_seq: dict[tuple, list[int]] = {}
    for s in lines:
        by_seq.setdefault(s.beat_ids, []).append(s.index)
    for seq, idxs in sorted(by_seq.items()):
        if len(idxs) > 1:
            hit(
                "V-DUPLICATE-STORYLINE",
                f"storylines {idxs} have the identical beat sequence {list(seq)}",
                tuple(idxs),
            )

    common = computed_common_beats(bundle)
    if len(common) not in (2, 3):
        hit(
            "V-COMMON-COUNT",
            f"{len(common)} beats are common to all storylines "
            f"({sorted(common)}); expected 2 or 3",
            tuple(sorted(common)),
        )
    for s in lines:
        pairs = [
            (u, v)
            for u, v in zip(s.beat_ids, s.beat_ids[1:])
            if u in common and v in common
        ]
        if pairs:
            hit(
                "V-COMMON-CONSECUTIVE",
                f"storyline {s.index} has adjacent common beats {pairs}",
                (s.index,),
            )
    declared = set(bundle.declared_common_beats)
    if declared != common:
        hit(
            "V-COMMON-DECLARED-MISMATCH",
            f"declared common beats {sorted(declared)} != computed {sorted(common)}",
            tuple(sorted(declared.symmetric_difference(common))),
        )

    for scc in _beat_cycles(bundle):
        hit(
            "V-CYCLE",
            f"beats {sorted(scc)} form a directed cycle in the merged graph",
            tuple(sorted(scc)),
        )

    return ValidationReport(
        violations=out,
        stats={
            "unique_beats": len(bundle.beats),
            "max_pairwise_run": max_run,
            "computed_common_beats": sorted(common),
        },
    )


def _beat_cycles(bundle: StoryBundle) -> list[set[int]]:
    """Strongly connected components of size > 1 (or with a self-loop)
    in the beat-only subgraph, ordered by smallest member."""
    edges = merge_transitions(bundle).beat_edges()
    adj: dict[int, list[int]] = {}
    nodes: set[int] = set()
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        nodes.update((u, v))
    for k in adj:
        adj[k].sort()

    # iterative Tarjan
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = [0]
    sccs: list[set[int]] = []

    for root in sorted(nodes):
        if root in index:
            continue
        work = [(root, iter(adj.get(root, ())))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(adj.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp: set[int] = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                if len(comp) > 1 or any(
                    (w, w) in edges for w in comp
                ):
                    sccs.append(comp)
    sccs.sort(key=min)
    return sccs
