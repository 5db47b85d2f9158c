"""Flat ``key = value`` config files (TOML syntax, no tables)."""
from __future__ import annotations

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .datagen import GeneratorParams
from .errors import InvalidArgumentError

GENERATOR_KEYS = {
    "variables": "num_variables",
    "subjects": "num_subjects",
    "factors": "num_factors",
    "k": "factor_strength",
    "q": "loading_floor",
    "seed": "seed",
    "m_distribution": "m_distribution",
    "epsilon_distribution": "epsilon_distribution",
}


def load_flat(path):
    """Parse a flat config file into a dict; nested tables are rejected."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise InvalidArgumentError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InvalidArgumentError(f"{path}: malformed config ({exc})") from None
    for key, value in data.items():
        if isinstance(value, dict):
            raise InvalidArgumentError(f"{path}: config must be flat, found table [{key}]")
    return data


def check_keys(data, allowed, source):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise InvalidArgumentError(f"{source}: unknown config key(s): {', '.join(unknown)}")


def generator_params_from_mapping(data, source="config", base=None):
    check_keys(data, GENERATOR_KEYS, source)
    kwargs = {} if base is None else dict(base.__dict__)
    for key, value in data.items():
        kwargs[GENERATOR_KEYS[key]] = value
    return GeneratorParams(**kwargs)


def load_generator_params(path):
    return generator_params_from_mapping(load_flat(path), source=str(path))
