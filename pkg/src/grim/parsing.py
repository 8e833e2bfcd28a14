"""Parser and serializer for the storyline document format.

The document is the structured text a generation model emits: an input
header, detailed storylines (beat-per-line with descriptions), START/END
pointer lines, a master beat list, a common-beats line, and numeric
storyline sequences. The parser is total: any input yields either a
StoryBundle or at least one error diagnostic, never an exception.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import Diagnostic, Severity
from .model import Beat, GenerationSpec, StoryBundle, Storyline, normalize_description

__all__ = ["ParseResult", "parse_storyline_document", "serialize_story_bundle"]

_BEAT_LINE = re.compile(r"^Beat[ _]*(\d+)\s*:\s*(.*)$", re.IGNORECASE)
_BEAT_SHAPE = re.compile(r"^Beat[\s_]", re.IGNORECASE)
_STORYLINE_HEAD = re.compile(r"^Storyline[ _]*(\d+)\s*:?\s*(.*)$", re.IGNORECASE)
_STORYLINE_SHAPE = re.compile(r"^Storyline[\s_]", re.IGNORECASE)
_STORYLINES_SECTION = re.compile(r"^Storylines\s*(?:\(\d+\))?\s*:?\s*$", re.IGNORECASE)
_POINTER = re.compile(r"^(START|END)[ _]*(\d+)\s*:\s*(.*)$", re.IGNORECASE)
_POINTER_SHAPE = re.compile(r"^(START|END)[\s_]*\d", re.IGNORECASE)
_POINTS_TO = re.compile(r"^Points\s+to\s+Beat[ _]*(\d+)\s*\.?\s*$", re.IGNORECASE)
_POINTS_FROM = re.compile(r"^Points\s+from\s+Beat[ _]*(\d+)\s*\.?\s*$", re.IGNORECASE)
_BEATS_SECTION = re.compile(r"^Beats\s*(?:\(\d+\))?\s*:?\s*$", re.IGNORECASE)
_COMMON_LINE = re.compile(r"^Common\s+intermediate\s+Beats?\s*:\s*(.*)$", re.IGNORECASE)
_HEADER_LINE = re.compile(
    r"^(Story|Starts|Endings|Storylines|Setting)\s*:\s*(.+?)\s*$", re.IGNORECASE
)
_SEQ_POINTER = re.compile(r"^(START|END)[ _]*(\d+)$", re.IGNORECASE)
_SEQ_BEAT = re.compile(r"^(?:Beat[ _]*)?(\d+)$", re.IGNORECASE)
_BEAT_REF = re.compile(r"^Beat[ _]*(\d+)$", re.IGNORECASE)


@dataclass
class ParseResult:
    """Outcome of one parse: a bundle unless any error diagnostic fired."""

    bundle: StoryBundle | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.bundle is not None

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.WARNING]


class _Scan:
    """Mutable state accumulated over one line pass."""

    def __init__(self):
        self.header: dict[str, str] = {}
        self.master: list[tuple[int, str, int]] = []  # (id, desc, line)
        self.has_master_section = False
        self.detailed: dict[int, list[tuple[int, str, int]]] = {}
        self.detailed_line: dict[int, int] = {}
        self.numeric: dict[int, tuple[str, list[int], str, int]] = {}
        self.pointer_starts: dict[str, int | None] = {}
        self.pointer_ends: dict[str, int | None] = {}
        self.declared_common: list[int] = []
        self.saw_common_line = False
        self.diags: list[Diagnostic] = []

    def error(self, code: str, line: int, message: str):
        self.diags.append(Diagnostic(Severity.ERROR, code, message, line))

    def warn(self, code: str, line: int, message: str):
        self.diags.append(Diagnostic(Severity.WARNING, code, message, line))


def _strip_trailing_comma(value: str) -> str:
    return value.rstrip().rstrip(",").rstrip()


def _norm_label(kind: str, num: str) -> str:
    return f"{kind.upper()}_{int(num)}"


def _parse_sequence(tokens: str) -> tuple[str, list[int], str] | str:
    """Parse 'START_1, 1, 2, END_1' style content; returns message on failure."""
    parts = [p.strip() for p in tokens.split(",")]
    parts = [p for p in parts if p]
    if len(parts) < 3:
        return "sequence needs a START label, at least one beat, and an END label"
    m = _SEQ_POINTER.match(parts[0])
    if not m or m.group(1).upper() != "START":
        return f"sequence must begin with a START label, got {parts[0]!r}"
    start = _norm_label(m.group(1), m.group(2))
    m = _SEQ_POINTER.match(parts[-1])
    if not m or m.group(1).upper() != "END":
        return f"sequence must end with an END label, got {parts[-1]!r}"
    end = _norm_label(m.group(1), m.group(2))
    beats: list[int] = []
    for tok in parts[1:-1]:
        bm = _SEQ_BEAT.match(tok)
        if not bm or _SEQ_POINTER.match(tok):
            return f"unrecognized beat reference {tok!r}"
        beats.append(int(bm.group(1)))
    return (start, beats, end)


def _looks_like_sequence(rest: str) -> bool:
    return isinstance(_parse_sequence(rest), tuple)


def _scan_lines(text: str) -> _Scan:
    st = _Scan()
    # container: None | ("master",) | ("detail", index)
    container: tuple | None = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue

        m = _COMMON_LINE.match(line)
        if m:
            container = None
            st.saw_common_line = True
            refs = [r.strip() for r in m.group(1).split(",") if r.strip()]
            for ref in refs:
                bm = _BEAT_REF.match(ref) or _SEQ_BEAT.match(ref)
                if bm:
                    st.declared_common.append(int(bm.group(1)))
                else:
                    st.warn(
                        "UNKNOWN-LINE",
                        lineno,
                        f"unrecognized common-beat reference {ref!r}",
                    )
            continue

        m = _POINTER.match(line)
        if m:
            container = None
            kind = m.group(1).upper()
            label = _norm_label(m.group(1), m.group(2))
            value = m.group(3).strip()
            target: int | None = None
            pm = (_POINTS_TO if kind == "START" else _POINTS_FROM).match(value)
            if pm:
                target = int(pm.group(1))
            table = st.pointer_starts if kind == "START" else st.pointer_ends
            if label in table and table[label] is not None and target is not None \
                    and table[label] != target:
                st.warn(
                    "POINTER-CONFLICT",
                    lineno,
                    f"{label} redeclared with beat {target}, keeping beat {table[label]}",
                )
            else:
                table.setdefault(label, target)
                if table[label] is None:
                    table[label] = target
            continue

        if _BEATS_SECTION.match(line):
            container = ("master",)
            st.has_master_section = True
            continue

        if _STORYLINES_SECTION.match(line):
            container = None
            continue

        m = _STORYLINE_HEAD.match(line)
        if m:
            idx = int(m.group(1))
            rest = m.group(2).strip()
            if idx < 1:
                container = None
                st.error("MALFORMED-LINE", lineno, "storyline index must be >= 1")
                continue
            if rest and _looks_like_sequence(rest):
                container = None
                if idx in st.numeric:
                    st.error(
                        "MALFORMED-LINE",
                        lineno,
                        f"storyline {idx} sequence listed twice",
                    )
                    continue
                seq = _parse_sequence(rest)
                st.numeric[idx] = (seq[0], seq[1], seq[2], lineno)
            elif rest and ("," in rest or _SEQ_POINTER.match(rest)):
                # comma-separated content that failed to parse as a sequence
                container = None
                st.error(
                    "MALFORMED-LINE",
                    lineno,
                    f"storyline {idx}: {_parse_sequence(rest)}",
                )
            else:
                if idx in st.detailed:
                    st.error(
                        "MALFORMED-LINE",
                        lineno,
                        f"storyline {idx} described twice",
                    )
                    container = None
                    continue
                st.detailed[idx] = []
                st.detailed_line[idx] = lineno
                container = ("detail", idx)
            continue

        m = _BEAT_LINE.match(line)
        if m:
            bid = int(m.group(1))
            desc = m.group(2).strip()
            if not desc:
                st.error("MALFORMED-LINE", lineno, f"beat {bid} has no description")
                continue
            if bid < 1:
                st.error("MALFORMED-LINE", lineno, f"beat id must be >= 1, got {bid}")
                continue
            if container and container[0] == "master":
                st.master.append((bid, desc, lineno))
            elif container and container[0] == "detail":
                st.detailed[container[1]].append((bid, desc, lineno))
            else:
                st.warn("UNKNOWN-LINE", lineno, "beat line outside any section; ignored")
            continue

        m = _HEADER_LINE.match(line)
        if m:
            key = m.group(1).lower()
            st.header.setdefault(key, _strip_trailing_comma(m.group(2)))
            continue

        if _BEAT_SHAPE.match(line) or _STORYLINE_SHAPE.match(line) \
                or _POINTER_SHAPE.match(line):
            st.error("MALFORMED-LINE", lineno, f"unparseable line: {line!r}")
            continue

        st.warn("UNKNOWN-LINE", lineno, f"unrecognized line ignored: {line!r}")
    return st


def _resolve_spec(st: _Scan, spec: GenerationSpec | None,
                  observed: tuple[int, int, int]) -> GenerationSpec | None:
    """Pick the bundle's spec: explicit argument wins, else the header."""

    def header_int(key: str) -> int | None:
        v = st.header.get(key)
        if v is None:
            return None
        try:
            return int(v)
        except ValueError:
            st.error("MALFORMED-LINE", 0, f"header {key!r} is not an integer: {v!r}")
            return None

    h_starts = header_int("starts")
    h_ends = header_int("endings")
    h_lines = header_int("storylines")
    if spec is not None:
        for name, have in (
            ("story", st.header.get("story")),
            ("setting", st.header.get("setting")),
        ):
            want = getattr(spec, name)
            if have is not None and have != want:
                st.warn(
                    "HEADER-MISMATCH", 0,
                    f"document says {name} {have!r}, expected {want!r}",
                )
        for name, have, want in (
            ("starts", h_starts, spec.n_starts),
            ("endings", h_ends, spec.n_endings),
            ("storylines", h_lines, spec.n_storylines),
        ):
            if have is not None and have != want:
                st.warn(
                    "HEADER-MISMATCH", 0,
                    f"document says {name} {have}, expected {want}",
                )
        return spec
    story = st.header.get("story")
    setting = st.header.get("setting")
    if story is None or setting is None:
        st.error(
            "MISSING-SECTION", 0,
            "no Story/Setting header and no explicit generation spec given",
        )
        return None
    n_starts, n_ends, n_lines = observed
    return GenerationSpec(
        story=story,
        setting=setting,
        n_starts=h_starts if h_starts is not None else max(n_starts, 1),
        n_endings=h_ends if h_ends is not None else max(n_ends, 1),
        n_storylines=h_lines if h_lines is not None else max(n_lines, 1),
    )


def parse_storyline_document(text: str,
                             spec: GenerationSpec | None = None) -> ParseResult:
    """Parse a storyline document; total over arbitrary input.

    When ``spec`` is given it becomes the bundle's spec and the header is
    only cross-checked; otherwise the header is required and supplies it.
    """
    st = _scan_lines(text or "")

    # beat description table: master list wins; first detailed occurrence
    # otherwise; material drift is reported.
    beats: dict[int, str] = {}
    master_ids: set[int] = set()
    for bid, desc, lineno in st.master:
        if bid in master_ids:
            if normalize_description(beats[bid]) != normalize_description(desc):
                st.error(
                    "DESC-CONFLICT", lineno,
                    f"master list gives beat {bid} two different descriptions",
                )
            continue
        master_ids.add(bid)
        beats[bid] = desc
    for idx in sorted(st.detailed):
        for bid, desc, lineno in st.detailed[idx]:
            if bid in beats:
                if normalize_description(beats[bid]) != normalize_description(desc):
                    st.warn(
                        "DESC-CONFLICT", lineno,
                        f"beat {bid} description in storyline {idx} differs from "
                        f"the {'master list' if bid in master_ids else 'first occurrence'}",
                    )
            else:
                beats[bid] = desc

    # assemble storylines: cross-check numeric against detailed where both exist
    sequences: dict[int, tuple[str, list[int], str]] = {}
    for idx in sorted(set(st.detailed) | set(st.numeric)):
        det = [b for b, _, _ in st.detailed.get(idx, [])]
        num = st.numeric.get(idx)
        if num is not None and det:
            if det != num[1]:
                st.error(
                    "SEQ-MISMATCH", num[3],
                    f"storyline {idx} numeric sequence {num[1]} does not match "
                    f"its detailed section {det}",
                )
                continue
        if num is not None:
            sequences[idx] = (num[0], num[1], num[2])
        elif det:
            sequences[idx] = ("", det, "")
        else:
            st.error(
                "MALFORMED-LINE", st.detailed_line.get(idx, 0),
                f"storyline {idx} has no beats",
            )

    # resolve labels for detailed-only storylines via pointers, else invent
    start_by_beat = {v: k for k, v in st.pointer_starts.items() if v is not None}
    end_by_beat = {v: k for k, v in st.pointer_ends.items() if v is not None}
    next_start = 1
    next_end = 1

    def fresh(prefix: str, taken: set[str], counter: int) -> tuple[str, int]:
        while f"{prefix}_{counter}" in taken:
            counter += 1
        return f"{prefix}_{counter}", counter

    taken_starts = set(st.pointer_starts) | {s for s, _, _ in sequences.values() if s}
    taken_ends = set(st.pointer_ends) | {e for _, _, e in sequences.values() if e}
    storylines: list[Storyline] = []
    for idx in sorted(sequences):
        start, ids, end = sequences[idx]
        if not start:
            if ids[0] in start_by_beat:
                start = start_by_beat[ids[0]]
            else:
                start, next_start = fresh("START", taken_starts, next_start)
                taken_starts.add(start)
                start_by_beat[ids[0]] = start
                st.warn(
                    "INFERRED-POINTER", st.detailed_line.get(idx, 0),
                    f"storyline {idx} has no explicit start label; using {start}",
                )
        if not end:
            if ids[-1] in end_by_beat:
                end = end_by_beat[ids[-1]]
            else:
                end, next_end = fresh("END", taken_ends, next_end)
                taken_ends.add(end)
                end_by_beat[ids[-1]] = end
                st.warn(
                    "INFERRED-POINTER", st.detailed_line.get(idx, 0),
                    f"storyline {idx} has no explicit end label; using {end}",
                )
        storylines.append(Storyline(idx, start, tuple(ids), end))

    if not storylines:
        st.error("MISSING-SECTION", 0, "no storylines found in the document")
    if not beats:
        st.error("MISSING-SECTION", 0, "no beat descriptions found in the document")

    # every referenced beat must be described, and be in the master list
    # when a master list exists
    for line in storylines:
        for bid in line.beat_ids:
            where = None
            if bid not in beats:
                where = "has no description anywhere"
            elif st.has_master_section and bid not in master_ids:
                where = "is missing from the master beat list"
            if where:
                num = st.numeric.get(line.index)
                at = num[3] if num else st.detailed_line.get(line.index, 0)
                st.error(
                    "DANGLING-REF", at,
                    f"storyline {line.index} references beat {bid}, which {where}",
                )

    used = {bid for s in storylines for bid in s.beat_ids}
    for bid in sorted(master_ids - used):
        st.warn("UNUSED-BEAT", 0, f"beat {bid} appears in no storyline")

    # starts/ends maps: explicit pointers, then first use per label
    starts: dict[str, int] = {
        k: v for k, v in st.pointer_starts.items() if v is not None
    }
    ends: dict[str, int] = {k: v for k, v in st.pointer_ends.items() if v is not None}
    for line in storylines:
        for table, label, beat in (
            (starts, line.start_label, line.beat_ids[0]),
            (ends, line.end_label, line.beat_ids[-1]),
        ):
            if label not in table:
                table[label] = beat
            elif table[label] != beat:
                st.warn(
                    "POINTER-CONFLICT", 0,
                    f"storyline {line.index} gives {label} beat {beat}, "
                    f"keeping beat {table[label]}",
                )
    used_starts = {s.start_label for s in storylines}
    used_ends = {s.end_label for s in storylines}
    for table, used_labels, kind in (
        (starts, used_starts, "start"),
        (ends, used_ends, "end"),
    ):
        for label in sorted(set(table) - used_labels):
            st.warn(
                "POINTER-CONFLICT", 0,
                f"declared {kind} label {label} is used by no storyline; dropped",
            )
            del table[label]

    resolved = _resolve_spec(
        st, spec, (len(starts), len(ends), len(storylines))
    )

    if any(d.severity is Severity.ERROR for d in st.diags) or resolved is None:
        return ParseResult(None, st.diags)

    bundle = StoryBundle(
        spec=resolved,
        beats=tuple(Beat(i, beats[i]) for i in sorted(beats)),
        storylines=tuple(storylines),
        starts=starts,
        ends=ends,
        declared_common_beats=tuple(sorted(set(st.declared_common))),
        raw_text=text,
    )
    return ParseResult(bundle, st.diags)


def _label_key(label: str) -> int:
    m = re.search(r"(\d+)$", label)
    return int(m.group(1)) if m else 0


def serialize_story_bundle(bundle: StoryBundle) -> str:
    """Render a bundle back into the document format, deterministically.

    parse(serialize(b)) reproduces b for any bundle satisfying the model
    invariants.
    """
    spec = bundle.spec
    lines: list[str] = [
        f"Story: {spec.story}",
        f"Starts: {spec.n_starts}",
        f"Endings: {spec.n_endings}",
        f"Storylines: {spec.n_storylines}",
        f"Setting: {spec.setting}",
        "",
        f"Storylines ({len(bundle.storylines)}):",
        "",
    ]
    beat_map = bundle.beat_map()
    for s in bundle.storylines:
        lines.append(f"Storyline {s.index}:")
        for bid in s.beat_ids:
            lines.append(f"Beat {bid}: {beat_map[bid].description}")
        lines.append("")
    for label in sorted(bundle.starts, key=_label_key):
        lines.append(f"{label}: Points to Beat {bundle.starts[label]}")
    lines.append("")
    for label in sorted(bundle.ends, key=_label_key):
        lines.append(f"{label}: Points from Beat {bundle.ends[label]}")
    lines.append("")
    lines.append("Beats:")
    for beat in bundle.beats:
        lines.append(f"Beat {beat.id}: {beat.description}")
    lines.append("")
    if bundle.declared_common_beats:
        refs = ", ".join(f"Beat {b}" for b in bundle.declared_common_beats)
        lines.append(f"Common intermediate Beats: {refs}")
        lines.append("")
    lines.append(f"Storylines ({len(bundle.storylines)})")
    for s in bundle.storylines:
        seq = ", ".join(str(b) for b in s.beat_ids)
        lines.append(f"Storyline {s.index}: {s.start_label}, {seq}, {s.end_label}")
    return "\n".join(lines) + "\n"
