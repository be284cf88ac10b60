"""Desk-scale peg-and-ring task automation toolkit.

Subpackages:
    planner    -- bounded-horizon symbolic task planner over ground atoms
    dmp        -- dynamic movement primitives (position + orientation)
    world      -- deterministic kinematic scene simulation
    awareness  -- observation grounding, live targets, failure detection
    perception -- synthetic point clouds and RANSAC-based ring/peg recovery
    executor   -- closed-loop plan execution with replanning and bridge
"""

__version__ = "0.1.0"
