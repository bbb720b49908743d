"""Repository module for runner."""
