"""
Runtime module for running trials and episodes in parallel.
"""

from .orchestrator import JobRunner

__all__ = ["JobRunner"]
