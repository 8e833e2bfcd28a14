"""Edit post-conditions, bundle diffs, and the regeneration loop."""

import pytest

from grim import (
    Beat,
    EditRejected,
    EditSet,
    GenerationSpec,
    StoryBundle,
    Storyline,
    apply_edit,
    diff_bundles,
    generate_project,
    relax_spec,
    verify_edit,
)
from grim.editing import (
    _renumber_to_requested,
    build_retry_prompt,
    summarize_failures,
)
from grim.errors import Diagnostic, Severity
from grim.prompts import PromptText

from conftest import FRANKENSTEIN_SPEC


def tiny(sequences, descs=None):
    ids = sorted({b for seq in sequences for b in seq})
    descs = descs or {}
    return StoryBundle(
        spec=GenerationSpec("t", "b", 1, 1, len(sequences)),
        beats=tuple(Beat(i, descs.get(i, f"beat {i}")) for i in ids),
        storylines=tuple(
            Storyline(n + 1, "START_1", tuple(seq), "END_1")
            for n, seq in enumerate(sequences)
        ),
        starts={"START_1": sequences[0][0]},
        ends={"END_1": sequences[0][-1]},
    )


def check(report, check_id):
    return next(c for c in report.checks if c.check_id == check_id)


# verify_edit

def test_added_beat_matched_by_id(frankenstein_21c_v1, frankenstein_21c_v2):
    edits = EditSet(
        nodes_added=(Beat(18, "Adam decides to help Dr. Frank on his next project."),),
        edges_added=((2, 18),),
    )
    report = verify_edit(frankenstein_21c_v1, frankenstein_21c_v2, edits)
    for check_id in ("E1", "E2", "E3", "E4"):
        assert check(report, check_id).passed, check_id
    # beats 3 and 4 were reworded between the fixtures, so E5 warns
    e5 = check(report, "E5")
    assert not e5.passed
    assert e5.severity is Severity.WARNING
    assert e5.subjects == (3, 4)
    assert report.ok  # warnings do not fail the report


def test_added_beat_matched_by_description_under_other_id():
    old = tiny([[1, 2]])
    new = tiny([[1, 7, 2]], descs={7: "A brand new scene."})
    report = verify_edit(old, new, EditSet(nodes_added=(Beat(3, "A brand new scene."),)))
    assert check(report, "E1").passed


def test_missing_added_beat_fails_e1():
    old = tiny([[1, 2]])
    new = tiny([[1, 2]])
    report = verify_edit(old, new, EditSet(nodes_added=(Beat(3, "Never materialized."),)))
    e1 = check(report, "E1")
    assert not e1.passed
    assert e1.subjects == (3,)
    assert not report.ok


def test_deleted_beat_still_used_fails_e2():
    old = tiny([[1, 2, 3]])
    new = tiny([[1, 2, 3]])
    report = verify_edit(old, new, EditSet(nodes_deleted=(2,)))
    e2 = check(report, "E2")
    assert not e2.passed
    assert e2.subjects == (2,)


def test_deleted_beat_gone_passes_e2():
    old = tiny([[1, 2, 3]])
    new = tiny([[1, 3]])
    report = verify_edit(old, new, EditSet(nodes_deleted=(2,)))
    assert check(report, "E2").passed


def test_added_edge_must_be_adjacent_somewhere():
    old = tiny([[1, 2, 3]])
    new = tiny([[1, 2, 3], [1, 3, 4]])
    good = verify_edit(old, new, EditSet(edges_added=((1, 3),)))
    assert check(good, "E3").passed
    bad = verify_edit(old, new, EditSet(edges_added=((2, 4),)))
    e3 = check(bad, "E3")
    assert not e3.passed
    assert e3.subjects == ((2, 4),)


def test_added_edge_may_touch_pointers():
    old = tiny([[1, 2]])
    new = tiny([[1, 2], [2, 3]])
    # second storyline starts at beat 2, so START_1 -> 2 is a transition
    report = verify_edit(old, new, EditSet(edges_added=(("START_1", 2),)))
    assert check(report, "E3").passed


def test_deleted_edge_still_present_fails_e4():
    old = tiny([[1, 2, 3]])
    new = tiny([[1, 2, 3]])
    report = verify_edit(old, new, EditSet(edges_deleted=((1, 2),)))
    e4 = check(report, "E4")
    assert not e4.passed
    assert e4.subjects == ((1, 2),)


def test_untouched_rewording_warns_e5_only():
    old = tiny([[1, 2]], descs={1: "The original text."})
    new = tiny([[1, 2, 3]], descs={1: "Completely different text."})
    report = verify_edit(old, new, EditSet(nodes_added=(Beat(3, "beat 3"),)))
    e5 = check(report, "E5")
    assert not e5.passed
    assert e5.subjects == (1,)
    assert report.ok


def test_e5_ignores_beats_the_edit_touched():
    old = tiny([[1, 2]], descs={2: "Old words."})
    new = tiny([[1, 3]], descs={3: "New scene."})
    edits = EditSet(nodes_added=(Beat(3, "New scene."),), nodes_deleted=(2,))
    report = verify_edit(old, new, edits)
    assert check(report, "E5").passed


# diff_bundles

def test_diff_between_fixture_versions(frankenstein_21c_v1, frankenstein_21c_v2):
    diff = diff_bundles(frankenstein_21c_v1, frankenstein_21c_v2)
    d = diff.to_dict()
    assert d["beats_added"] == [18, 19, 20, 21, 22, 23]
    assert d["beats_removed"] == []
    assert d["storylines_added"] == [5]
    assert d["storylines_removed"] == []
    assert d["storylines_changed"] == []
    assert [2, 18] in d["edges_added"]
    assert [23, "END_3"] in d["edges_added"]
    assert d["edges_removed"] == []


def test_diff_of_identical_bundles_is_empty(frankenstein_21c_v1):
    assert diff_bundles(frankenstein_21c_v1, frankenstein_21c_v1).is_empty()


def test_diff_detects_changed_storyline():
    old = tiny([[1, 2, 3], [1, 4, 3]])
    new = tiny([[1, 2, 3], [1, 2, 4, 3]])
    d = diff_bundles(old, new).to_dict()
    assert d["storylines_changed"] == [2]
    assert d["edges_added"] == [[2, 4]]
    assert d["edges_removed"] == [[1, 4]]


# relax_spec

def test_relax_spec_raises_counts_to_observed(frankenstein_21c_v2):
    relaxed = relax_spec(FRANKENSTEIN_SPEC, frankenstein_21c_v2)
    assert relaxed.n_starts == 1
    assert relaxed.n_endings == 3  # edit grew the endings from 2
    assert relaxed.n_storylines == 5


def test_relax_spec_never_lowers_targets():
    shrunken = tiny([[1, 2]])
    relaxed = relax_spec(GenerationSpec("t", "b", 2, 4, 8), shrunken)
    assert relaxed.n_starts == 2
    assert relaxed.n_endings == 4
    assert relaxed.n_storylines == 8


# renumbering

def test_renumber_maps_description_match_back_to_requested_id():
    got = tiny([[1, 7, 2]], descs={7: "A brand new scene."})
    edits = EditSet(nodes_added=(Beat(3, "A brand new scene."),), edges_added=((1, 3),))
    fixed = _renumber_to_requested(got, edits)
    assert fixed is not got
    assert fixed.beat_ids() == {1, 2, 3}
    assert fixed.storylines[0].beat_ids == (1, 3, 2)
    # the serialized text reflects the renumbered bundle
    assert "Beat 3: A brand new scene." in fixed.raw_text


def test_renumber_is_noop_when_ids_match():
    got = tiny([[1, 2, 3]], descs={3: "As requested."})
    edits = EditSet(nodes_added=(Beat(3, "As requested."),))
    assert _renumber_to_requested(got, edits) is got


def test_renumber_skips_occupied_target_ids():
    got = tiny([[1, 2, 7]], descs={7: "New scene.", 2: "squatter"})
    edits = EditSet(nodes_added=(Beat(2, "New scene."),))
    # id 2 is already a different beat; renumbering would clobber it
    assert _renumber_to_requested(got, edits) is got


# failure summaries and retry prompts

def test_summarize_failures_numbers_every_line():
    diag = Diagnostic(Severity.ERROR, "MISSING-SECTION", "no beats found", 0)
    text = summarize_failures(diagnostics=[diag])
    assert text == "1. parse error MISSING-SECTION: no beats found"


def test_retry_prompt_embeds_failures_and_chains_digest():
    base = PromptText("edit", "the original prompt", "abc123", "edit-v1")
    retry = build_retry_prompt(base, "1. something went wrong")
    assert retry.text.startswith("the original prompt")
    assert "1. something went wrong" in retry.text
    assert retry.input_digest != base.input_digest
    assert retry.template_version == "edit-v1"
    # deterministic: same inputs, same digest
    again = build_retry_prompt(base, "1. something went wrong")
    assert again.input_digest == retry.input_digest


# apply_edit against replay fixtures

def frankenstein_project(replay_config):
    project, validation = generate_project(FRANKENSTEIN_SPEC, replay_config)
    assert validation.ok
    return project


def test_apply_edit_accepts_on_first_attempt(replay_config):
    project = frankenstein_project(replay_config)
    edits = EditSet(
        nodes_added=(Beat(18, "Adam decides to help Dr. Frank on his next project."),),
        edges_added=((2, 18),),
    )
    outcome = apply_edit(project, edits, replay_config)
    assert outcome.attempts == 1
    assert len(outcome.transcripts) == 1
    assert outcome.edit_report.ok
    assert outcome.validation.ok
    assert outcome.new_bundle.storyline(5).beat_ids == (1, 2, 18, 19, 20, 3, 4, 21, 22, 23)
    assert len(project.versions) == 2
    entry = project.current()
    assert entry.version == 2
    assert entry.provenance["kind"] == "edited"
    assert entry.provenance["edits"] == edits.to_dict()


def test_apply_edit_exhausts_on_unusable_answers(replay_config):
    project = frankenstein_project(replay_config)
    with pytest.raises(EditRejected) as err:
        apply_edit(project, EditSet(nodes_deleted=(5,)), replay_config)
    rejected = err.value
    assert rejected.code == "EDIT-EXHAUSTED"
    assert rejected.attempts == 3
    assert [r["stage"] for r in rejected.reports] == ["parse"] * 3
    assert all(r["problems"] for r in rejected.reports)
    # no version was appended
    assert len(project.versions) == 1


def test_apply_edit_rejects_empty_edit_set(replay_config):
    project = frankenstein_project(replay_config)
    with pytest.raises(ValueError):
        apply_edit(project, EditSet(), replay_config)
