"""Deterministic 2D rope-shaping sandbox.

Synthetic keypoint datasets, geometric keypoint perception, a kinematic
node-chain rope simulator, and a contact-aware coarse-to-fine bimanual
planner, all sharing one small geometry core.
"""

__version__ = "0.1.0"
