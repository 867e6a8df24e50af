"""posesim: physical plausibility evaluation of 3D human pose sequences.

A PD-controlled humanoid tracks the input poses inside a deterministic
rigid-body simulation; CMA-ES trajectory optimization refines the kinematic
targets; the report combines simulation-based metrics (CoM distance, pose
stability duration) with classical kinematic and physics checks.
"""

__version__ = "0.1.0"
