"""Tests unitaires pour ring-analyzer."""
