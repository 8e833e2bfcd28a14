"""Shared fixtures: canned documents and a replay-mode provider config."""

from pathlib import Path

import pytest

from grim import GenerationSpec, ProviderConfig, parse_storyline_document

FIXTURES = Path(__file__).parent / "fixtures"

RED_RIDING_HOOD_SPEC = GenerationSpec("Little Red Riding Hood", "21st century", 2, 4, 8)
MINECRAFT_SPEC = GenerationSpec("Little Red Riding Hood", "Minecraft", 1, 1, 8)
FRANKENSTEIN_SPEC = GenerationSpec("Frankenstein", "21st century", 1, 2, 4)


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text("utf-8")


def parse_fixture(name: str, spec=None):
    result = parse_storyline_document(fixture_text(name), spec=spec)
    assert result.bundle is not None, [d.to_dict() for d in result.errors()]
    return result.bundle


@pytest.fixture(scope="session")
def red_riding_hood_21c():
    return parse_fixture("red_riding_hood_21c.txt", spec=RED_RIDING_HOOD_SPEC)


@pytest.fixture(scope="session")
def little_red_minecraft():
    return parse_fixture("little_red_minecraft.txt", spec=MINECRAFT_SPEC)


@pytest.fixture(scope="session")
def frankenstein_21c_v1():
    return parse_fixture("frankenstein_21c_v1.txt", spec=FRANKENSTEIN_SPEC)


@pytest.fixture(scope="session")
def frankenstein_21c_v2():
    return parse_fixture("frankenstein_21c_v2.txt")


@pytest.fixture
def replay_config():
    return ProviderConfig(mode="replay", fixture_dir=FIXTURES / "transcripts")
