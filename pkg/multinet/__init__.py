"""
Mode-conditioned multi-task driving workbench.
"""

__version__ = "0.1.0"
