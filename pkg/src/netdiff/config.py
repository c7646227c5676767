"""Process-level netdiff settings."""

from __future__ import annotations

from pydantic import Field
from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict


class NetdiffSettings(BaseSettings):
    """Environment driven settings.

    Every field can be set with a ``NETDIFF_`` prefixed environment variable,
    for example ``NETDIFF_THREADS=4``.
    """

    threads: int = Field(
        default=1, ge=1, description="Upper bound on assembly worker threads."
    )
    log_level: str = Field(default="WARNING", description="Log level for the CLI.")
    geometry_tolerance: float = Field(
        default=1e-12,
        gt=0,
        description="Relative tolerance for edge length and position checks.",
    )
    extinction_threshold: float = Field(
        default=1e-12,
        gt=0,
        description="Relative threshold on X(t)/X(0) that counts as extinction.",
    )

    model_config = SettingsConfigDict(
        env_prefix="NETDIFF_",
        env_nested_delimiter="__",
        extra="ignore",
        case_sensitive=False,
    )
