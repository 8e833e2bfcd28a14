"""Property-based checks of the core laws the package relies on."""

import json

from hypothesis import given, settings, strategies as st

from grim import (
    Beat,
    GenerationSpec,
    Project,
    StoryBundle,
    Storyline,
    build_render_payload,
    load,
    longest_common_run,
    merge_transitions,
    parse_storyline_document,
    save,
    serialize_story_bundle,
)
from grim.render import node_label

MANY = settings(max_examples=1000, deadline=None)


# strategies

def clean_text(max_size, alphabet="abcdefghijklmnopqrstuvwxyz '.-"):
    return (
        st.text(alphabet=alphabet, min_size=1, max_size=max_size)
        .map(lambda s: s.strip().rstrip(","))
        .filter(lambda s: s)
    )


@st.composite
def story_bundles(draw):
    """Structurally consistent bundles: every storyline beat is described,
    labels are shared per distinct first/last beat, indexes ascend."""
    n_beats = draw(st.integers(min_value=1, max_value=8))
    ids = list(range(1, n_beats + 1))
    descs = draw(
        st.lists(clean_text(30), min_size=n_beats, max_size=n_beats)
    )
    beats = tuple(Beat(i, d) for i, d in zip(ids, descs))

    n_lines = draw(st.integers(min_value=1, max_value=4))
    sequences = draw(
        st.lists(
            st.lists(st.sampled_from(ids), min_size=1, max_size=6),
            min_size=n_lines,
            max_size=n_lines,
        )
    )

    start_labels: dict[int, str] = {}
    end_labels: dict[int, str] = {}
    lines = []
    for n, seq in enumerate(sequences, start=1):
        first, last = seq[0], seq[-1]
        start_labels.setdefault(first, f"START_{len(start_labels) + 1}")
        end_labels.setdefault(last, f"END_{len(end_labels) + 1}")
        lines.append(
            Storyline(n, start_labels[first], tuple(seq), end_labels[last])
        )

    # the parser canonicalizes the declared list to sorted-unique
    declared = tuple(sorted(draw(st.lists(st.sampled_from(ids), max_size=4, unique=True))))
    spec = GenerationSpec(
        story=draw(clean_text(20)),
        setting=draw(clean_text(20)),
        n_starts=draw(st.integers(min_value=1, max_value=9)),
        n_endings=draw(st.integers(min_value=1, max_value=9)),
        n_storylines=draw(st.integers(min_value=1, max_value=9)),
    )
    return StoryBundle(
        spec=spec,
        beats=beats,
        storylines=tuple(lines),
        starts={lbl: b for b, lbl in start_labels.items()},
        ends={lbl: b for b, lbl in end_labels.items()},
        declared_common_beats=declared,
    )


# longest_common_run against a quadratic oracle

def lcr_oracle(a, b):
    best = (0, 0, 0)
    for i in range(len(a)):
        for j in range(len(b)):
            k = 0
            while i + k < len(a) and j + k < len(b) and a[i + k] == b[j + k]:
                k += 1
            if k > best[0]:
                best = (k, i, j)
    return best


@MANY
@given(
    st.lists(st.integers(min_value=1, max_value=9), max_size=12),
    st.lists(st.integers(min_value=1, max_value=9), max_size=12),
)
def test_lcr_matches_bruteforce(a, b):
    assert longest_common_run(a, b) == lcr_oracle(a, b)


# parse/serialize round trip

@MANY
@given(story_bundles())
def test_parse_serialize_fixpoint(bundle):
    text = serialize_story_bundle(bundle)
    result = parse_storyline_document(text)
    assert result.errors() == []
    assert result.bundle == bundle
    assert serialize_story_bundle(result.bundle) == text


# render payload laws

@MANY
@given(story_bundles())
def test_payload_node_count_law(bundle):
    payload = build_render_payload(bundle)
    assert len(payload.nodes) == (
        len(bundle.beats) + len(bundle.starts) + len(bundle.ends)
    )
    assert set(payload.nodes) == set(payload.edges)


@MANY
@given(story_bundles())
def test_payload_edge_symmetry(bundle):
    payload = build_render_payload(bundle)
    from_outgoing = set()
    from_incoming = set()
    for key, (incoming, outgoing) in payload.edges.items():
        for src, dst in outgoing:
            assert src == key
            from_outgoing.add((src, dst))
        for src, dst in incoming:
            assert dst == key
            from_incoming.add((src, dst))
    assert from_outgoing == from_incoming
    # the pairs are exactly the merged transitions, relabeled
    graph = merge_transitions(bundle)
    expected = {(node_label(u), node_label(v)) for u, v in graph.edges}
    assert from_outgoing == expected


# persistence round trip

@MANY
@given(
    bundle=story_bundles(),
    seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_save_load_round_trip(tmp_path_factory, bundle, seed):
    path = tmp_path_factory.mktemp("store") / f"{seed:x}.grim.json"
    project = Project(id=f"{seed:012x}"[:12], spec=bundle.spec)
    project.add_version(bundle, provenance={"kind": "generated"}, transcripts=[])
    save(project, path)
    loaded = load(path)
    assert loaded.id == project.id
    assert loaded.spec == bundle.spec
    entry = loaded.version(1)
    assert entry.bundle == bundle
    assert entry.payload.nodes == project.version(1).payload.nodes
    assert entry.payload.edges == project.version(1).payload.edges


# parser totality

@settings(max_examples=300, deadline=None)
@given(st.text(max_size=400))
def test_parser_is_total_over_arbitrary_text(text):
    result = parse_storyline_document(text)
    assert (result.bundle is None) == bool(result.errors())


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_parser_survives_decoded_binary(blob):
    text = blob.decode("utf-8", errors="replace")
    result = parse_storyline_document(
        text, spec=GenerationSpec("x", "y", 1, 1, 1)
    )
    assert result.bundle is not None or result.errors()
