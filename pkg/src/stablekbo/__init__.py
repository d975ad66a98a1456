"""Consensus-based global optimization driven by symmetric alpha-stable jumps."""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    ConsensusState,
    KboConfig,
    NonFinitePositionsError,
    ParticleEnsemble,
    RunRecord,
    consensus_point,
    diffusion_apply,
    diffusion_step,
    drift_step,
    init_ensemble,
    kbo_step,
    run,
)
from .diagnostics import (  # noqa: F401
    MomentParams,
    TheoryConstants,
    b_p_alpha,
    c_p_alpha,
    fit_decay_rate,
    mass_in_ball,
    omega_d,
    success_check,
    v_p_moment,
)
from .harness import (  # noqa: F401
    ExperimentSpec,
    SweepResult,
    emit_csv,
    parse_config,
    run_experiment,
    run_preset,
)
from .objectives import Objective, eval_objective, list_objectives, make_objective  # noqa: F401
from .rng import (  # noqa: F401
    RngStream,
    StableLaw,
    empirical_char_fn,
    sample_normal,
    sample_stable,
    sample_stable_vector,
)
from .validation import (  # noqa: F401
    DensityGrid,
    ValidationConfig,
    convergence_study,
    exact_solution,
    linf_error,
    reconstruct_density,
    run_validation,
    validation_step,
)
