"""Release gate: one test per headline guarantee, run offline on replay
fixtures. Each test is a single pass/fail line under pytest -v."""

import time

from grim import (
    Beat,
    EditSet,
    apply_edit,
    build_render_payload,
    diff_bundles,
    generate_project,
    parse_render_payload,
    parse_storyline_document,
    reconcile,
    serialize_story_bundle,
    validate,
)

import test_properties
from conftest import (
    FIXTURES,
    FRANKENSTEIN_SPEC,
    MINECRAFT_SPEC,
    RED_RIDING_HOOD_SPEC,
    fixture_text,
    parse_fixture,
)


def test_red_riding_hood_round_trip_is_fixpoint_under_one_second():
    text = fixture_text("red_riding_hood_21c.txt")
    started = time.perf_counter()
    bundle = parse_fixture("red_riding_hood_21c.txt", RED_RIDING_HOOD_SPEC)
    regenerated = serialize_story_bundle(bundle)
    again = parse_storyline_document(regenerated, spec=RED_RIDING_HOOD_SPEC)
    elapsed = time.perf_counter() - started

    assert len(bundle.beats) == 35
    assert len(bundle.storylines) == 8
    assert len(bundle.starts) == 2
    assert len(bundle.ends) == 4
    assert set(bundle.declared_common_beats) == {3, 4, 16}
    assert again.bundle == bundle
    assert serialize_story_bundle(again.bundle) == regenerated
    assert text  # source document really was non-trivial
    assert elapsed < 1.0


def test_red_riding_hood_validates_clean_with_expected_warnings():
    bundle = parse_fixture("red_riding_hood_21c.txt", RED_RIDING_HOOD_SPEC)
    report = validate(bundle)

    assert report.errors() == []
    assert report.stats["unique_beats"] == 35  # budget floor is 2*8 = 16
    assert report.stats["max_pairwise_run"] == 3
    assert report.stats["computed_common_beats"] == [3]
    warned = {v.code for v in report.warnings()}
    assert "V-COMMON-COUNT" in warned
    assert "V-COMMON-DECLARED-MISMATCH" in warned


def test_little_red_minecraft_draft_fails_expected_checks():
    bundle = parse_fixture("little_red_minecraft.txt", MINECRAFT_SPEC)
    report = validate(bundle)

    run_errors = [v for v in report.errors() if v.code == "V-RUN-LENGTH"]
    assert (1, 3) in [v.subjects for v in run_errors]
    assert report.stats["max_pairwise_run"] == 4
    budget = [v for v in report.errors() if v.code == "V-BEAT-BUDGET"]
    assert budget and report.stats["unique_beats"] == 8  # floor is 16
    cycles = [v for v in report.warnings() if v.code == "V-CYCLE"]
    assert any({2, 3} <= set(v.subjects) for v in cycles)


def test_little_red_minecraft_graph_matches_oracle_and_reconciles():
    bundle = parse_fixture("little_red_minecraft.txt", MINECRAFT_SPEC)
    oracle = build_render_payload(bundle)

    assert len(oracle.nodes) == len(bundle.beats) + 2 == 10
    assert len(oracle.edge_pairs()) == 19

    handwritten, warnings = parse_render_payload(
        fixture_text("little_red_minecraft_payload.txt")
    )
    assert warnings == []
    report, repaired = reconcile(handwritten, bundle)
    assert len(report.missing_edges) == 6
    assert report.extra_edges == []
    assert report.missing_nodes == [] and report.extra_nodes == []
    assert repaired.nodes.keys() == oracle.nodes.keys()
    assert repaired.edges == oracle.edges


def test_edit_loop_accepts_new_storyline_in_one_attempt(replay_config):
    project, _ = generate_project(FRANKENSTEIN_SPEC, replay_config)
    edits = EditSet(
        nodes_added=(Beat(18, "Adam decides to help Dr. Frank on his next project."),),
        edges_added=((2, 18),),
    )
    outcome = apply_edit(project, edits, replay_config)

    assert outcome.attempts == 1
    assert project.current().bundle.storyline(5).beat_ids == (
        1, 2, 18, 19, 20, 3, 4, 21, 22, 23,
    )
    structural = {c.check_id: c for c in outcome.edit_report.checks}
    for check_id in ("E1", "E2", "E3", "E4"):
        assert structural[check_id].passed
    old = project.version(1).bundle
    diff = diff_bundles(old, outcome.new_bundle)
    assert (2, 18) in diff.edges_added
    for line in old.storylines:  # prior lines untouched
        assert outcome.new_bundle.storyline(line.index).beat_ids == line.beat_ids


def test_replayed_frankenstein_generation_matches_requested_shape(replay_config):
    project, report = generate_project(FRANKENSTEIN_SPEC, replay_config)
    payload = project.version(1).payload

    starts = [k for k in payload.nodes if k.startswith("START_")]
    ends = [k for k in payload.nodes if k.startswith("END_")]
    assert len(starts) == 1
    assert len(ends) == 2
    assert len(project.version(1).bundle.storylines) == 4
    assert report.errors() == []


def test_property_suites_cover_thousand_cases_offline():
    assert test_properties.MANY.max_examples >= 1000
    for suite in (
        test_properties.test_lcr_matches_bruteforce,
        test_properties.test_parse_serialize_fixpoint,
        test_properties.test_payload_node_count_law,
        test_properties.test_payload_edge_symmetry,
        test_properties.test_save_load_round_trip,
    ):
        assert callable(suite)
    # replay-only: every recorded exchange ships with the tests
    recorded = sorted(p.name for p in (FIXTURES / "transcripts").glob("*.json"))
    assert len(recorded) == 7
