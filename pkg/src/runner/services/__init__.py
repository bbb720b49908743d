"""Service module for runner."""
