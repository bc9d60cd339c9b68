"""
Utility modules for the multi-modal driving workbench.
"""

from .logging import setup_logging

__all__ = ["setup_logging"]
