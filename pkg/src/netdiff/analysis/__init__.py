"""Diagnostics and experiments on computed runs."""
