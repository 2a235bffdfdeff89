"""Decentralized collective perception with self-calibrating degrading sensors.

A swarm of simulated agents diffuses over a black-and-white tile arena,
estimating the arena's fill ratio while each agent's ground sensor degrades
as a clamped random walk. Each agent simultaneously tracks its own sensor
accuracy with a scalar Kalman filter referenced to a smoothed consensus
estimate, constrains it to the feasible range, and adapts how much of its
observation history is still trustworthy.
"""

from ._njit import NUMBA_ENABLED

__version__ = "0.1.0"

__all__ = ["NUMBA_ENABLED", "__version__"]
