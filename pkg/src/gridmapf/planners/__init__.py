"""Centralized MAPF solvers and plan utilities."""

from .astar import astar
from .cbs import cbs_solve, check_instance
from .common import (
    PLAN_FORMAT,
    Conflict,
    Constraint,
    JointPlan,
    Path,
    Timeout,
    TransitionMode,
    first_conflict,
    load_plan,
    make_joint_plan,
    plan_from_dict,
    plan_to_dict,
    save_plan,
    sum_of_costs,
    transition_collisions,
)
from .odmstar import odrmstar_solve
from .oracle import joint_oracle
from .space_time import space_time_astar
from .validate import Violation, validate_plan

__all__ = [
    "PLAN_FORMAT",
    "Conflict",
    "Constraint",
    "JointPlan",
    "Path",
    "Timeout",
    "TransitionMode",
    "Violation",
    "astar",
    "cbs_solve",
    "check_instance",
    "first_conflict",
    "joint_oracle",
    "load_plan",
    "make_joint_plan",
    "odrmstar_solve",
    "plan_from_dict",
    "plan_to_dict",
    "save_plan",
    "space_time_astar",
    "sum_of_costs",
    "transition_collisions",
    "validate_plan",
]
