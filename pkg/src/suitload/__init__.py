"""Interface loads between a rigid-segment protective suit and its wearer.

Leg-odometry state estimation, Newton-Euler inverse dynamics with push-only
contacts and pull-only belts, and load-comparison statistics.
"""

from .analysis import (LoadSeries, OutlierRemover, TrialStats, remove_outliers, resultant_load,
                       rms_error, trial_report)
from .dynamics import (ContactSolution, InfeasibleWrenchError, InterfaceLoadModel, Wrench,
                       distribute_forces, inverse_dynamics_trial, required_wrench,
                       tangential_ratio)
from .estimator import (FilterState, LegOdometryFilter, NoiseConfig, predict, run_filter,
                        update)
from .kinematics import (JointAngles, SegmentKinematics, TrialRecording, differentiate_poses,
                         fk_jacobian, foot_fk)
from .model import (Anthropometry, BeltConstraint, ContactPoint, ContactRegion, SuitModel,
                    SuitSegment, build_default_suit, region_points_world)
from .pipeline import PipelineConfig, load_config, run_pipeline
from .synth import generate_synthetic_trial

__version__ = "0.1.0"

__all__ = [
    "Anthropometry", "BeltConstraint", "ContactPoint", "ContactRegion", "ContactSolution",
    "FilterState", "InfeasibleWrenchError", "InterfaceLoadModel", "JointAngles",
    "LegOdometryFilter", "LoadSeries", "NoiseConfig", "OutlierRemover", "PipelineConfig",
    "SegmentKinematics", "SuitModel", "SuitSegment", "TrialRecording", "TrialStats", "Wrench",
    "build_default_suit", "differentiate_poses", "distribute_forces", "fk_jacobian", "foot_fk",
    "generate_synthetic_trial", "inverse_dynamics_trial", "load_config", "predict",
    "region_points_world", "remove_outliers", "required_wrench", "resultant_load", "rms_error",
    "run_filter", "run_pipeline", "tangential_ratio", "trial_report", "update",
]
