"""
Config Loader — YAML experiment files into validated ``ExperimentConfig`` objects.

Unknown keys and violated inequalities are reported as
``<dotted.key> (line L): message`` using the YAML node marks.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml
from pydantic import ValidationError

from pyda_models.models import ExperimentConfig, WeightMode
from src.core.errors import ConfigurationError

logger = logging.getLogger(__name__)

KeyPath = Tuple[str, ...]


def key_lines(text: str) -> Dict[KeyPath, int]:
    """Map every mapping key path in the document to its 1-based line."""
    root = yaml.compose(text)
    lines: Dict[KeyPath, int] = {}

    def walk(node: Any, path: KeyPath) -> None:
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                sub = path + (str(key_node.value),)
                lines[sub] = key_node.start_mark.line + 1
                walk(value_node, sub)
        elif isinstance(node, yaml.SequenceNode):
            for k, item in enumerate(node.value):
                sub = path + (str(k),)
                lines[sub] = item.start_mark.line + 1
                walk(item, sub)

    if root is not None:
        walk(root, ())
    return lines


def _line_for(loc: KeyPath, lines: Dict[KeyPath, int]) -> Optional[int]:
    for cut in range(len(loc), 0, -1):
        if loc[:cut] in lines:
            return lines[loc[:cut]]
    return None


def _render(exc: ValidationError, lines: Dict[KeyPath, int]) -> ConfigurationError:
    err = exc.errors()[0]
    loc = tuple(str(part) for part in err["loc"])
    key = ".".join(loc) or "<root>"
    message = err["msg"]
    if err["type"] == "extra_forbidden":
        message = f"unknown key '{loc[-1]}'"
    message = message.removeprefix("Value error, ")
    more = len(exc.errors()) - 1
    if more:
        message += f" (+{more} more)"
    return ConfigurationError(message, key=key, line=_line_for(loc, lines))


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate one YAML document."""
    try:
        data = yaml.safe_load(text)
        lines = key_lines(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigurationError(f"malformed YAML in {source}: {getattr(exc, 'problem', exc)}", key="<yaml>", line=line)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source} must contain a mapping of sections", key="<root>")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise _render(exc, lines) from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc.strerror}", key=str(path)) from None
    cfg = parse_config(text, str(path))
    logger.debug("loaded %s experiment from %s", cfg.experiment.value, path)
    return cfg


def apply_overrides(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
    weight_mode: Optional[WeightMode] = None,
) -> ExperimentConfig:
    """Command-line flags win over the file; the result is revalidated."""
    data = cfg.model_dump()
    if seed is not None:
        data["seed"] = seed
    if output_dir is not None:
        data["output_dir"] = output_dir
    if weight_mode is not None:
        data["problem"]["basis"]["weight_mode"] = weight_mode
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise _render(exc, {}) from None
