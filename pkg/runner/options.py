"""
Option resolution for experiment commands

Values come from three layers, highest precedence first: command-line
flags, a ``KEY=value`` config file (dotenv grammar: ``#`` comments, optional
quotes), and a named preset. Keys are long flag names with ``-`` replaced by
``_``; config-file keys are matched case-insensitively.
"""
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Union

from dotenv import dotenv_values
from django.core.exceptions import ImproperlyConfigured

logger = logging.getLogger(__name__)

TRUE_WORDS = {'1', 'true', 'yes', 'on'}
FALSE_WORDS = {'0', 'false', 'no', 'off', ''}


def parse_bool(value: Union[str, bool]) -> bool:
    if isinstance(value, bool):
        return value
    word = str(value).strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_int_list(value: Union[str, list, tuple]) -> list:
    """'3,5,7' or '0..7' (inclusive range) into a list of ints"""
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    items = []
    for part in str(value).split(','):
        part = part.strip()
        if not part:
            continue
        if '..' in part:
            start, stop = part.split('..')
            items.extend(range(int(start), int(stop) + 1))
        else:
            items.append(int(part))
    return items


def parse_float_list(value: Union[str, list, tuple]) -> list:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(part) for part in str(value).split(',') if part.strip()]


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Read a config file into lower-case, underscore keys

    Raises:
        ImproperlyConfigured: if the file does not exist
    """
    path = Path(path)
    if not path.is_file():
        raise ImproperlyConfigured(f"config file {path} does not exist")
    values = dotenv_values(path)
    return {key.strip().lower().replace('-', '_'): ('' if value is None else value) for key, value in values.items()}


def resolve_options(fields: Mapping[str, Callable[[Any], Any]], flags: Mapping[str, Any],
                    file_values: Optional[Mapping[str, str]] = None,
                    preset_values: Optional[Mapping[str, Any]] = None,
                    defaults: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """
    Merge option layers for every declared field

    Args:
        fields: field name -> converter applied to file and preset values
        flags: parsed command-line options; None means "not given"
        file_values: values from a config file
        preset_values: values from a named preset
        defaults: fallback values

    Raises:
        ImproperlyConfigured: on unknown config-file keys or unconvertible values
    """
    file_values = dict(file_values or {})
    unknown = sorted(set(file_values) - set(fields))
    if unknown:
        raise ImproperlyConfigured(f"unknown config keys {unknown}; expected some of {sorted(fields)}")

    resolved = {}
    for name, convert in fields.items():
        for layer in (flags, file_values, preset_values or {}, defaults or {}):
            if layer.get(name) not in (None, ''):
                value = layer[name]
                break
        else:
            resolved[name] = None
            continue
        try:
            resolved[name] = convert(value)
        except (TypeError, ValueError) as exc:
            raise ImproperlyConfigured(f"invalid value {value!r} for '{name}': {exc}") from exc
    return resolved


def format_option(value: Any) -> str:
    """Inverse of the converters above, used when echoing resolved config"""
    if isinstance(value, (list, tuple)):
        return ','.join(format_option(v) for v in value)
    if isinstance(value, bool):
        return '1' if value else '0'
    if value is None:
        return ''
    return str(value)
