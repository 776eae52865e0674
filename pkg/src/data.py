"""Load and cache the built-in example registry (examples.json) once."""
import json
from pathlib import Path
from typing import Any

from src.errors import ConfigError

_examples: dict[str, dict[str, Any]] | None = None


def load_examples(path: Path) -> None:
    """Load the registry into the module cache, keyed by example id."""
    global _examples
    if not path.exists():
        raise ConfigError(f"example registry not found: {path}")
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    _examples = {}
    for entry in doc.get("examples", []):
        if "id" not in entry:
            raise ConfigError(f"example without an id in {path}")
        _examples[str(entry["id"])] = entry


def get_examples() -> dict[str, dict[str, Any]]:
    if _examples is None:
        from src.config import get_examples_path
        load_examples(get_examples_path())
    return _examples or {}


def get_example(example_id: str) -> dict[str, Any]:
    examples = get_examples()
    if example_id not in examples:
        raise ConfigError(f"unknown example {example_id!r}; available: {', '.join(sorted(examples))}")
    return examples[example_id]


def reset_cache() -> None:
    global _examples
    _examples = None


def expected_periods(entry: dict[str, Any]) -> dict[str, float]:
    """Per-root periods the solvers reproduce; the published ones where no reproduction is recorded."""
    return dict(entry.get("reproduced_periods") or entry.get("published_periods", {}))


def period_discrepancies(entry: dict[str, Any]) -> dict[str, tuple[float, float]]:
    """root -> (published, reproduced) where the two differ."""
    published = entry.get("published_periods", {})
    return {k: (published[k], v) for k, v in expected_periods(entry).items() if k in published and published[k] != v}
