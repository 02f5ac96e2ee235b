"""Dynamic batch sizes from gradient direction change during accumulation."""
from .controller import (
    AccumRound,
    BatchRecord,
    ControllerConfig,
    Decision,
    DegeneratePolicy,
    Verdict,
    begin_round,
    consistency_gap,
    finalize_round,
    observe_minibatch,
)
from .grad_vector import NORM_FLOOR, DegenerateGradient, GradVector, accumulate, angle_deg, dot, norm
from .kernels import BACKEND
from .sampler import GroupStats, SamplerConfig, SamplerMode, normalize_probs, sample_group
from .sim_stream import StreamConfig, expected_pure_noise_angle
from .trainer import RunReport, TrainConfig, summarize, train

__version__ = "0.1.0"
