"""Probabilistic movement primitives with beta-function phase profiles."""

from .basis import BasisConfig, FeatureRow, eval_features, features, observation_matrix
from .data import BenchmarkSpec, Trajectory, gen_jointspace, gen_parabolic, gen_reaching, read_csv, write_csv
from .phase import AlignmentResult, AlignOptions, PhaseProfile, align, phase_at, phase_distribution, phase_velocity
from .promp import Demonstration, ProMPModel, condition, fit, fit_library, fit_model, generate, project_weights
from .recognition import MovementLibrary, RecognitionTrace, classify_stream, obs_likelihood, phase_posterior
from .perception import PhaseNet, PhaseNetConfig, build_training_pairs, classify_with_phase_estimate, estimate_phase, train

__version__ = "0.1.0"
