"""
Plain-text run configuration: one `section.field = value` per line, `#`
starts a comment. The file is tokenized by python-dotenv; command-line
overrides use the same `key=value` form and win over the file. Lists are
comma-separated.
"""
import io
import logging
import re
import typing
from pathlib import Path
from typing import Dict, Iterable, Optional

from dotenv.parser import Binding, parse_stream
from pydantic import BaseModel, ValidationError

from src.core.errors import ConfigError, DataIOError
from src.schemas.run_schema import RunConfig

logger = logging.getLogger(__name__)

KEY_RE = re.compile(r"^[a-z][a-z0-9_]*\.[a-z][a-z0-9_]*$")
NONE_VALUES = {"none", "null", ""}


def _line_of(binding: Binding) -> int:
    raw = binding.original.string
    return binding.original.line + raw[: len(raw) - len(raw.lstrip())].count("\n")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for binding in parse_stream(io.StringIO(text)):
        if binding.key is None and not binding.error:
            continue
        lineno = _line_of(binding)
        if binding.error or binding.value is None:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {binding.original.string.strip()!r}")
        key, value = parse_override(f"{binding.key}={binding.value}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: key '{key}' set twice")
        values[key] = value
    return values


def read_config_file(path: str) -> Dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataIOError(f"cannot read config file {path}: {exc.strerror or exc}")
    return parse_config_text(text, source=path)


def parse_override(item: str) -> tuple:
    key, sep, value = item.partition("=")
    key, value = key.strip(), value.strip()
    if not sep:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    if not KEY_RE.fullmatch(key):
        raise ConfigError(f"invalid key '{key}'; expected section.field")
    return key, value


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    return dict(parse_override(item) for item in items)


def _is_list(annotation) -> bool:
    if typing.get_origin(annotation) is list:
        return True
    return any(typing.get_origin(arg) is list for arg in typing.get_args(annotation))


def _accepts_none(annotation) -> bool:
    return type(None) in typing.get_args(annotation)


def nest(flat: Dict[str, str], root: type = RunConfig) -> Dict[str, dict]:
    """Dotted keys into section dicts, splitting list fields on commas."""
    nested: Dict[str, dict] = {}
    for key, value in flat.items():
        section, field = key.split(".", 1)
        section_info = root.model_fields.get(section)
        if section_info is None:
            raise ConfigError(f"unknown config section '{section}' in key '{key}'")
        section_model: type[BaseModel] = section_info.annotation
        field_info = section_model.model_fields.get(field)
        if field_info is None:
            raise ConfigError(f"unknown config key '{key}'")
        parsed: object = value
        if _accepts_none(field_info.annotation) and value.lower() in NONE_VALUES:
            parsed = None
        elif _is_list(field_info.annotation):
            parsed = [part.strip() for part in value.split(",") if part.strip()]
        nested.setdefault(section, {})[field] = parsed
    return nested


def build_run_config(config_path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    flat = read_config_file(config_path) if config_path else {}
    flat.update(overrides or {})
    try:
        return RunConfig.model_validate(nest(flat))
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}")
