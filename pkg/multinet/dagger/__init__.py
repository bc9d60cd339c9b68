"""
Supervised driving with expert override and corrective data aggregation.
"""

from .supervisor import Supervisor, supervise
from .aggregate import AggregationRound, harvest, iterate, write_round_summary

__all__ = ["AggregationRound", "Supervisor", "harvest", "iterate", "supervise", "write_round_summary"]
