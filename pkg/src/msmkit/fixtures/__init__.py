"""Bundled example data sets."""

from importlib import resources
from pathlib import Path

FIXTURES = ("aml.csv", "colonIDM.csv", "ebmt4.csv", "veteran.csv")


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled CSV fixture."""
    if not name.endswith(".csv"):
        name = name + ".csv"
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; have {FIXTURES}")
    return Path(resources.files(__package__) / name)


def read_fixture(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")
