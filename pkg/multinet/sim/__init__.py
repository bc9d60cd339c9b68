"""
Deterministic 2D driving world: tracks, car, camera, oracle experts and episodes.
"""

from multinet.sim.episode import (
    ConstantPolicy,
    EpisodeLog,
    NetworkPolicy,
    Observation,
    hard_left_policy,
    run_episode,
    start_pose,
)
from multinet.sim.collect import Collection, collect_all, collect_expert_data, scene_for, scene_seed
from multinet.sim.experts import (
    DirectExpert,
    Expert,
    FollowExpert,
    FurtiveExpert,
    LeadCar,
    expert_direct,
    expert_follow,
    expert_for,
    expert_furtive,
)
from multinet.sim.render import render, render_stereo
from multinet.sim.track import FoliageBand, Obstacle, Track, generate_track, straight_track, validate_track
from multinet.sim.vehicle import CarState, control_maps, step

__all__ = [
    "CarState",
    "Collection",
    "ConstantPolicy",
    "DirectExpert",
    "EpisodeLog",
    "Expert",
    "FoliageBand",
    "FollowExpert",
    "FurtiveExpert",
    "LeadCar",
    "NetworkPolicy",
    "Observation",
    "Obstacle",
    "Track",
    "collect_all",
    "collect_expert_data",
    "control_maps",
    "expert_direct",
    "expert_follow",
    "expert_for",
    "expert_furtive",
    "generate_track",
    "hard_left_policy",
    "render",
    "render_stereo",
    "run_episode",
    "scene_for",
    "scene_seed",
    "start_pose",
    "step",
    "straight_track",
    "validate_track",
]
