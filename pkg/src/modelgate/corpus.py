"""Access to the shipped corpus of `.tsm` models."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .dsl import parse_model
from .model import Model

CORPUS_MODELS = ("mc_model1", "mc_model2", "mc_model3")


def corpus_dir() -> Path:
    return Path(str(resources.files("modelgate") / "corpus"))


def corpus_path(name: str) -> Path:
    path = corpus_dir() / f"{name}.tsm"
    if not path.is_file():
        raise FileNotFoundError(f"no corpus model named '{name}'")
    return path


def load_corpus_model(name: str) -> Model:
    return parse_model(corpus_path(name).read_text(encoding="utf-8"))
