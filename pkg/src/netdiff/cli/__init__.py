"""Command line interface components."""
