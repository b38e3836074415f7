"""Orchestration services built on the core modules."""
