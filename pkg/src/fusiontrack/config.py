"""``key = value`` configuration files.

One setting per line, ``#`` starts a comment, blank lines are ignored. Lists
are comma-separated (``thresholds = 0.9, 0.8, 0.7``); occlusion events are
written ``object:start:duration`` (``occlusions = 1:20:5, 3:40:8``).
Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import typing
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


def parse_key_values(text: str, source: str = "<config>") -> dict[str, tuple[int, str]]:
    """Map key -> (line number, raw value)."""
    out: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = (lineno, value)
    return out


def read_key_values(path: str | Path | None) -> dict[str, tuple[int, str]]:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_key_values(text, str(p))


def _convert(value: str, hint, where: str) -> Any:
    from .simulator import Occlusion

    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if value.lower() == "none":
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(value, inner[0], where)
    if origin is tuple:
        items = [s.strip() for s in value.split(",") if s.strip()]
        if args and args[-1] is Ellipsis:
            return tuple(_convert(s, args[0], where) for s in items)
        if len(items) != len(args):
            raise ConfigError(f"{where}: expected {len(args)} comma-separated values, got {len(items)}")
        return tuple(_convert(s, a, where) for s, a in zip(items, args))
    if hint is Occlusion:
        try:
            oid, start, dur = (int(s) for s in value.split(":"))
        except ValueError:
            raise ConfigError(f"{where}: occlusion must be 'object:start:duration', got {value!r}") from None
        return Occlusion(oid, start, dur)
    if hint is bool:
        low = value.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {value!r}")
    if hint is int:
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {value!r}") from None
    if hint is float:
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    raise ConfigError(f"{where}: unsupported setting type {hint!r}")


def build(cls, values: dict[str, tuple[int, str]], source: str = "<config>", **overrides):
    """Instantiate dataclass ``cls`` from parsed values; unset fields keep defaults."""
    hints = typing.get_type_hints(cls)
    kwargs: dict[str, Any] = {}
    for key, (lineno, raw) in values.items():
        if key not in hints:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        kwargs[key] = _convert(raw, hints[key], f"{source}:{lineno}: {key}")
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: invalid {cls.__name__}: {exc}") from None


def split_keys(values: dict[str, tuple[int, str]], *classes, source: str = "<config>") -> list[dict]:
    """Route each key to the first dataclass in ``classes`` that declares it."""
    groups: list[dict] = [{} for _ in classes]
    names = [{f.name for f in dataclasses.fields(c)} for c in classes]
    for key, item in values.items():
        for group, known in zip(groups, names):
            if key in known:
                group[key] = item
                break
        else:
            raise ConfigError(f"{source}:{item[0]}: unknown key {key!r}")
    return groups
