"""Reaction-diffusion on polygonal domains partitioned by metric graphs."""

from netdiff.io import parse_config
from netdiff.output import emit_outputs
from netdiff.simulation import Simulation

__all__ = ["Simulation", "emit_outputs", "parse_config"]
