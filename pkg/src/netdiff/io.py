"""Loading, overriding and hashing run configurations.

Configurations are JSON documents read through fsspec, so any URL fsspec
understands works, for example ``memory://case.json`` in tests.
"""

from __future__ import annotations

import hashlib
import json
import types
import typing
from typing import TYPE_CHECKING
from typing import Any
from typing import TypeVar

from fsspec.core import url_to_fs
from pydantic import BaseModel
from pydantic import ValidationError
from rapidfuzz import process
from rapidfuzz.fuzz import WRatio

from netdiff.exceptions import CoefficientError
from netdiff.exceptions import ConfigError
from netdiff.exceptions import InvalidFieldError
from netdiff.geometry import PartitionedDomain
from netdiff.model import CouplingTable
from netdiff.schema.run import RunConfig

if TYPE_CHECKING:
    from collections.abc import Iterable
    from collections.abc import Sequence

    from netdiff.schema.base import CamelCaseModel

ModelT = TypeVar("ModelT", bound=BaseModel)


def _nested_models(annotation: Any) -> Iterable[type[BaseModel]]:  # noqa: ANN401
    """Pydantic models reachable from a field annotation."""
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        yield annotation
        return
    origin = typing.get_origin(annotation)
    if origin is None and not isinstance(annotation, types.UnionType):
        return
    for arg in typing.get_args(annotation):
        yield from _nested_models(arg)


def known_keys(model: type[BaseModel]) -> set[str]:
    """Every field name and alias of a model and the models nested in it."""
    keys: set[str] = set()
    pending = [model]
    seen: set[type[BaseModel]] = set()
    while pending:
        current = pending.pop()
        if current in seen:
            continue
        seen.add(current)
        for name, info in current.model_fields.items():
            keys.add(name)
            if info.alias is not None:
                keys.add(info.alias)
            pending.extend(_nested_models(info.annotation))
    return keys


def process_str_for_fuzz(string: str) -> str:
    """Remove underscores and lowercase string."""
    return string.replace("_", "").lower()


def get_suggestion_keys(key: str, candidates: Iterable[str]) -> list[str]:
    """Get similar keys using weighted text similarity metrics."""
    suggestions = process.extract(
        key,
        sorted(candidates),
        limit=3,
        scorer=WRatio,
        processor=process_str_for_fuzz,
    )
    return [match[0] for match in suggestions]


def format_location(loc: Sequence[int | str]) -> str:
    """Dotted path with list indices in brackets, e.g. ``model.coefficients.gamma.entries[3]``."""
    text = ""
    for part in loc:
        if isinstance(part, int):
            text += f"[{part}]"
        else:
            text += f".{part}" if text else str(part)
    return text or "<root>"


def located_errors(err: ValidationError, model: type[BaseModel]) -> list[tuple[str, str]]:
    """Convert a pydantic error into (location, message) pairs.

    Unknown keys carry "did you mean" suggestions.
    """
    candidates = known_keys(model)
    errors = []
    for error in err.errors():
        loc = error["loc"]
        message = error["msg"]
        if error["type"] == "extra_forbidden" and loc:
            key = str(loc[-1])
            message = str(InvalidFieldError(key, get_suggestion_keys(key, candidates)))
        errors.append((format_location(loc), message))
    return errors


def validate_document(document: dict[str, Any], model: type[ModelT]) -> ModelT:
    """Validate a JSON document against a configuration model.

    Raises:
        ConfigError: With every located error of the document.
    """
    try:
        return model.model_validate(document)
    except ValidationError as err:
        raise ConfigError(located_errors(err, model)) from err


def read_document(path: str) -> dict[str, Any]:
    """Read a JSON object from a local path or URL.

    Raises:
        ConfigError: If the file cannot be read or is not a JSON object.
    """
    try:
        fs, url = url_to_fs(path)
        with fs.open(url, "r") as f:
            document = json.load(f)
    except OSError as err:
        raise ConfigError([(path, f"cannot read configuration: {err}")]) from err
    except json.JSONDecodeError as err:
        location = f"{path}:{err.lineno}:{err.colno}"
        raise ConfigError([(location, err.msg)]) from err

    if not isinstance(document, dict):
        raise ConfigError([(path, "configuration must be a JSON object")])
    return document


def _coerce(value: str) -> Any:  # noqa: ANN401
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(document: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Set dotted-path keys of a raw document from ``key=value`` strings.

    Values are parsed as JSON and fall back to plain strings. Integer path
    parts index into lists and missing sections are created.

    Args:
        document: Raw configuration, modified in place.
        overrides: Items like ``discretization.dt=0.005``.

    Returns:
        The modified document.

    Raises:
        ConfigError: On malformed items or paths that do not exist.
    """
    errors = []
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            errors.append((item, "override must look like key=value"))
            continue

        parts = key.split(".")
        target: Any = document
        try:
            for part in parts[:-1]:
                if isinstance(target, list):
                    target = target[int(part)]
                else:
                    target = target.setdefault(part, {})
            if isinstance(target, list):
                target[int(parts[-1])] = _coerce(value)
            else:
                target[parts[-1]] = _coerce(value)
        except (KeyError, IndexError, ValueError, TypeError):
            errors.append((key, "no such configuration path"))

    if errors:
        raise ConfigError(errors)
    return document


def _coefficient_errors(config: RunConfig) -> list[tuple[str, str]]:
    domain = PartitionedDomain.from_spec(config.geometry)
    try:
        CouplingTable.resolve(domain, config.model.coefficients)
    except CoefficientError as err:
        located = []
        for line in str(err).splitlines():
            location, _, message = line.partition(": ")
            located.append((location, message))
        return located
    return []


def parse_config(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    """Read, override and validate a run configuration.

    Coefficient entries are checked against the incidence of the geometry so
    that entries naming non-incident pairs fail here with their location.

    Args:
        path: Local path or fsspec URL of a JSON file.
        overrides: Optional ``key=value`` overrides applied before validation.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: With every located error found.
    """
    document = apply_overrides(read_document(path), overrides)
    config = validate_document(document, RunConfig)
    errors = _coefficient_errors(config)
    if errors:
        raise ConfigError(errors)
    return config


def config_hash(config: CamelCaseModel) -> str:
    """SHA-256 of the canonical JSON dump (sorted keys, by alias)."""
    document = config.model_dump(mode="json")
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
