"""Asynchronous multi-context systems with declarative stream packing."""
