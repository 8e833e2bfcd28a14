"""Regenerate the replay transcripts and golden prompts under tests/fixtures/.

The transcripts pair each prompt the test suite will build with a canned
response document, keyed by prompt digest, so the whole pipeline can run
offline. Rerun after changing a template or a fixture document.
"""
from __future__ import annotations

import json
from pathlib import Path

from grim import (
    Beat,
    EditSet,
    GenerationSpec,
    Transcript,
    build_edit_prompt,
    build_generation_prompt,
    build_graphify_prompt,
    parse_storyline_document,
    prompt_digest,
)
from grim.editing import build_retry_prompt, summarize_failures
from grim.prompts import PromptText

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
TRANSCRIPTS = FIXTURES / "transcripts"
GOLDEN = FIXTURES / "golden"

MODEL = "gpt-4"
BASE_STAMP = "2025-11-05T12:{:02d}:00+00:00"


def write_transcript(prompt: PromptText, response: str, minute: int) -> str:
    digest = prompt_digest(prompt.text)
    transcript = Transcript(
        prompt_digest=digest,
        prompt_text=prompt.text,
        response_text=response,
        model_name=MODEL,
        template_version=prompt.template_version,
        timestamp=BASE_STAMP.format(minute),
        latency_ms=1200 + minute,
    )
    path = TRANSCRIPTS / f"{digest}.json"
    path.write_text(
        json.dumps(transcript.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return digest


def main() -> None:
    TRANSCRIPTS.mkdir(parents=True, exist_ok=True)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for stale in TRANSCRIPTS.glob("*.json"):
        stale.unlink()

    frank_spec = GenerationSpec("Frankenstein", "21st century", 1, 2, 4)
    minecraft_spec = GenerationSpec("Little Red Riding Hood", "Minecraft", 1, 1, 8)
    frank_v1 = (FIXTURES / "frankenstein_21c_v1.txt").read_text("utf-8")
    frank_v2 = (FIXTURES / "frankenstein_21c_v2.txt").read_text("utf-8")
    minecraft = (FIXTURES / "little_red_minecraft.txt").read_text("utf-8")
    minecraft_payload = (FIXTURES / "little_red_minecraft_payload.txt").read_text("utf-8")
    garbage = (FIXTURES / "garbage_response.txt").read_text("utf-8")

    written: list[tuple[str, str]] = []

    gen_frank = build_generation_prompt(frank_spec)
    written.append(("generate frankenstein", write_transcript(gen_frank, frank_v1, 0)))
    (GOLDEN / "generate_frankenstein_21c.txt").write_text(gen_frank.text, encoding="utf-8")

    gen_mc = build_generation_prompt(minecraft_spec)
    written.append(("generate minecraft", write_transcript(gen_mc, minecraft, 1)))
    (GOLDEN / "generate_little_red_minecraft.txt").write_text(gen_mc.text, encoding="utf-8")

    graph_mc = build_graphify_prompt(minecraft)
    written.append(("graphify minecraft", write_transcript(graph_mc, minecraft_payload, 2)))
    (GOLDEN / "graphify_little_red_minecraft.txt").write_text(graph_mc.text, encoding="utf-8")

    v1_bundle = parse_storyline_document(frank_v1, spec=frank_spec).bundle
    assert v1_bundle is not None
    happy_edits = EditSet(
        nodes_added=(Beat(18, "Adam decides to help Dr. Frank on his next project."),),
        edges_added=((2, 18),),
    )
    edit_prompt = build_edit_prompt(v1_bundle, happy_edits)
    written.append(("edit frankenstein", write_transcript(edit_prompt, frank_v2, 3)))
    (GOLDEN / "edit_frankenstein_21c.txt").write_text(edit_prompt.text, encoding="utf-8")

    # Chain of three rejected attempts: every answer fails to parse, so each
    # retry prompt embeds the previous failure summary.
    doomed_edits = EditSet(nodes_deleted=(5,))
    prompt = build_edit_prompt(v1_bundle, doomed_edits)
    for attempt in range(3):
        written.append((f"doomed edit attempt {attempt + 1}",
                        write_transcript(prompt, garbage, 4 + attempt)))
        result = parse_storyline_document(garbage, spec=frank_spec)
        prompt = build_retry_prompt(prompt, summarize_failures(diagnostics=result.errors()))

    for label, digest in written:
        print(f"{digest}  {label}")
    print(f"{len(written)} transcripts, {len(list(GOLDEN.glob('*.txt')))} golden prompts")


if __name__ == "__main__":
    main()
