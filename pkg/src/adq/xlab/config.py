"""Parameter parsing for the experiment runner.

Parameters are typed by their defaults: ints, floats, strings, booleans and
comma-separated tuples of numbers.  Config files hold one ``key = value`` per
line; blank lines and lines starting with ``#`` are ignored.
"""
from pathlib import Path


class UsageError(ValueError):
    """Bad command line or config; the CLI maps this to exit status 2."""


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def coerce(key, text, default):
    """Convert ``text`` to the type of ``default``."""
    try:
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            kind = type(default[0]) if default else float
            parts = [p for p in text.replace(" ", "").split(",") if p]
            return tuple(kind(p) for p in parts)
        return str(text).strip()
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {text!r} ({exc})") from None


def parse_assignment(item):
    if "=" not in item:
        raise UsageError(f"expected key=value, got {item!r}")
    key, value = item.split("=", 1)
    key = key.strip()
    if not key:
        raise UsageError(f"empty key in {item!r}")
    return key, value.strip()


def read_config_file(path):
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            pairs.append(parse_assignment(line))
        except UsageError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return pairs


def resolve(defaults, *layers):
    """Merge layers of (key, text) pairs over ``defaults``; later layers win.

    Unknown keys raise :class:`UsageError`.
    """
    params = dict(defaults)
    for layer in layers:
        for key, text in layer:
            if key not in defaults:
                known = ", ".join(sorted(defaults))
                raise UsageError(f"unknown parameter {key!r} (known: {known})")
            params[key] = coerce(key, text, defaults[key])
    return params


def format_value(value):
    """Inverse of :func:`coerce`, used in manifests."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
