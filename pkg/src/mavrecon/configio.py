"""Plain-text configuration overlay: a small TOML-style key/value tree.

Supports `[section.subsection]` headers, dotted keys, scalars (bool, int,
float, quoted or bare strings), and flat lists of scalars. Enough for
mission parameter files without pulling in a full TOML dependency.
"""

from __future__ import annotations

from pathlib import Path


def _parse_scalar(token: str):
    token = token.strip()
    if token.lower() == "true":
        return True
    if token.lower() == "false":
        return False
    if (token.startswith('"') and token.endswith('"')) or \
            (token.startswith("'") and token.endswith("'")):
        return token[1:-1]
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    return token


def _parse_value(token: str):
    token = token.strip()
    if token.startswith("[") and token.endswith("]"):
        inner = token[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(part) for part in inner.split(",")]
    return _parse_scalar(token)


def _assign(tree: dict, dotted: str, value) -> None:
    node = tree
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValueError(f"config key conflict at {dotted!r}")
    node[parts[-1]] = value


def parse_config_text(text: str) -> dict:
    tree: dict = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section:
                _assign(tree, section, tree.get(section, {})
                        if "." not in section else {})
                # ensure nested path exists
                node = tree
                for part in section.split("."):
                    node = node.setdefault(part, {})
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        value = value.split("#", 1)[0]
        dotted = f"{section}.{key.strip()}" if section else key.strip()
        _assign(tree, dotted, _parse_value(value))
    return tree


def load_config_file(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text())


def deep_update(base: dict, overlay: dict) -> dict:
    """Recursive dict merge; overlay wins on scalar conflicts."""
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_update(out[key], value)
        else:
            out[key] = value
    return out
