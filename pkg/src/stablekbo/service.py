"""HTTP service wrapping the optimizer, validation and experiment harness.

The CLI is a thin client of this app (in-process by default, remote with
``--server``); every computation therefore goes through the same request
and response models, and CSV artifacts are rendered server-side so that
client-written files are byte-identical to server output.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .core import KboConfig, NonFinitePositionsError, run
from .diagnostics import MomentParams, c_p_alpha
from .harness import (
    ExperimentSpec,
    preset_names,
    render_csv,
    run_experiment,
    run_preset,
)
from .objectives import list_objectives, make_objective
from .rng import RngStream
from .validation import (
    ValidationConfig,
    convergence_study,
    render_density_csv,
    render_error_csv,
    run_validation,
)

__all__ = ["create_app"]


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__


class ObjectiveInfo(BaseModel):
    name: str
    differentiable: bool


class ConstantsResponse(BaseModel):
    b_p_alpha: float
    c_p_alpha: float
    omega_d: float
    condition_ok: bool


class ConfigFields(BaseModel):
    """Run parameters shared by single runs and sweeps."""

    nu: float = 1.0
    sigma: float = 0.0
    gamma: float = 2.0
    alpha: float = 1.5
    beta: float = 5e6
    dt: float = 0.1
    n_t: int = 10_000
    n_particles: int = 200
    diffusion_mode: str = "anisotropic"
    delta_stall: float = 1e-4
    j_stall: int = 1_000
    init_lo: float = -5.12
    init_hi: float = -2.0
    noise_clip: float | None = None
    stall_mode: str = "consecutive"


class RunRequest(ConfigFields):
    objective: str = "rastrigin"
    dim: int = 20
    seed: int = 0
    record_consensus: bool = False
    vp_p: float | None = None  # record the p-th moment trajectory when set
    vp_target: list[float] | None = None  # defaults to the objective minimizer


class RunResponse(BaseModel):
    success: bool
    iterations_used: int
    final_consensus: list[float]
    terminated_by: str
    consensus_trajectory: list[list[float]] | None = None
    vp_trajectory: list[tuple[float, float]] | None = None


class ExperimentRequest(ConfigFields):
    objective: str = "rastrigin"
    dim: int = 20
    sweep: str = "gamma"
    values: list[float | str] = Field(default=[2.0], min_length=1)
    m_runs: int = 20
    base_seed: int = 0
    iters_success_only: bool = False
    workers: int | None = None


class SweepResultModel(BaseModel):
    axis: float | int | str
    success_rate: float
    mean_iterations: float
    m_runs: int
    seed: int


class ExperimentResponse(BaseModel):
    results: list[SweepResultModel]
    csv: str


class PresetRequest(BaseModel):
    base_seed: int | None = None
    workers: int | None = None
    m_runs: int | None = None
    n_t: int | None = None
    n_particles: int | None = None
    n_values: list[int] | None = None
    n_seeds: int | None = None


class PresetResponse(BaseModel):
    files: dict[str, str]


class DensityRequest(BaseModel):
    n_particles: int = 10**5
    seed: int = 0
    snapshot_times: list[float] = [0.1, 1.0, 2.0]
    dt: float = 0.01
    t_final: float = 2.0
    m_x: int = 2**10
    lo: float = -20.0
    hi: float = 20.0


class DensitySnapshot(BaseModel):
    t: float
    linf_error: float
    mass: float
    n_escaped: int
    csv: str


class DensityResponse(BaseModel):
    snapshots: list[DensitySnapshot]


class ConvergenceRequest(BaseModel):
    n_values: list[int] = [10**3, 10**4, 10**5]
    n_seeds: int = 5
    seed: int = 0
    dt: float = 0.01
    t_final: float = 2.0


class ConvergenceResponse(BaseModel):
    points: list[tuple[int, float]]
    slope: float
    csv: str


def _spec_from_request(req: ExperimentRequest) -> ExperimentSpec:
    values = tuple(
        v if isinstance(v, str) else float(v) for v in req.values
    )
    return ExperimentSpec(
        objective=req.objective,
        dim=req.dim,
        sweep=req.sweep,
        values=values,
        m_runs=req.m_runs,
        base_seed=req.base_seed,
        iters_success_only=req.iters_success_only,
        workers=req.workers,
        nu=req.nu,
        sigma=req.sigma,
        gamma=req.gamma,
        alpha=req.alpha,
        beta=req.beta,
        dt=req.dt,
        n_t=req.n_t,
        n_particles=req.n_particles,
        diffusion_mode=req.diffusion_mode,
        delta_stall=req.delta_stall,
        j_stall=req.j_stall,
        init_lo=req.init_lo,
        init_hi=req.init_hi,
        noise_clip=req.noise_clip,
        stall_mode=req.stall_mode,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="stablekbo", version=__version__)

    @app.exception_handler(ValueError)
    def _value_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(NonFinitePositionsError)
    def _blowup_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse()

    @app.get("/objectives", response_model=list[ObjectiveInfo])
    def objectives():
        return [
            ObjectiveInfo(name=name, differentiable=make_objective(name, 2).differentiable)
            for name in list_objectives()
        ]

    @app.get("/constants", response_model=ConstantsResponse)
    def constants(d: int, p: float, alpha: float, nu: float = 1.0, gamma: float = 1.0):
        consts = c_p_alpha(nu, gamma, d, p, alpha)
        return ConstantsResponse(
            b_p_alpha=consts.b_p_alpha,
            c_p_alpha=consts.c_p_alpha,
            omega_d=consts.omega_d,
            condition_ok=consts.condition_ok,
        )

    @app.post("/runs", response_model=RunResponse)
    def single_run(req: RunRequest):
        obj = make_objective(req.objective, req.dim)
        config = KboConfig(
            dim=req.dim, nu=req.nu, sigma=req.sigma, gamma=req.gamma, alpha=req.alpha,
            beta=req.beta, dt=req.dt, n_t=req.n_t, n_particles=req.n_particles,
            diffusion_mode=req.diffusion_mode, delta_stall=req.delta_stall,
            j_stall=req.j_stall, seed=req.seed, init_box=(req.init_lo, req.init_hi),
            noise_clip=req.noise_clip, stall_mode=req.stall_mode,
        )
        vp_params = None
        if req.vp_p is not None:
            target = req.vp_target if req.vp_target is not None else obj.minimizer
            vp_params = MomentParams(req.vp_p, target)
        record = run(obj, config, stream=RngStream(req.seed),
                     record_consensus=req.record_consensus, vp_params=vp_params)
        return RunResponse(
            success=record.success,
            iterations_used=record.iterations_used,
            final_consensus=[float(v) for v in record.final_consensus],
            terminated_by=record.terminated_by,
            consensus_trajectory=(
                [[float(v) for v in point] for point in record.consensus_trajectory]
                if record.consensus_trajectory is not None
                else None
            ),
            vp_trajectory=record.vp_trajectory,
        )

    @app.post("/experiments", response_model=ExperimentResponse)
    def experiments(req: ExperimentRequest):
        spec = _spec_from_request(req)
        results = run_experiment(spec, workers=req.workers)
        return ExperimentResponse(
            results=[
                SweepResultModel(
                    axis=res.axis if isinstance(res.axis, (str, int)) else float(res.axis),
                    success_rate=res.success_rate,
                    mean_iterations=res.mean_iterations,
                    m_runs=res.m_runs,
                    seed=res.seed,
                )
                for res in results
            ],
            csv=render_csv(results),
        )

    @app.get("/presets")
    def presets():
        return {"presets": preset_names()}

    @app.post("/presets/{name}", response_model=PresetResponse)
    def preset(name: str, req: PresetRequest):
        kwargs = {}
        if req.base_seed is not None:
            kwargs["base_seed"] = req.base_seed
        files = run_preset(
            name,
            workers=req.workers,
            overrides={
                "m_runs": req.m_runs,
                "n_t": req.n_t,
                "n_particles": req.n_particles,
                "n_values": req.n_values,
                "n_seeds": req.n_seeds,
            },
            **kwargs,
        )
        return PresetResponse(files=files)

    @app.post("/validation/density", response_model=DensityResponse)
    def validation_density(req: DensityRequest):
        config = ValidationConfig(
            n_particles=req.n_particles, dt=req.dt, t_final=req.t_final, seed=req.seed
        )
        result = run_validation(
            config, snapshot_times=tuple(req.snapshot_times),
            lo=req.lo, hi=req.hi, m_x=req.m_x,
        )
        return DensityResponse(
            snapshots=[
                DensitySnapshot(
                    t=t,
                    linf_error=result.errors[t],
                    mass=grid.mass(),
                    n_escaped=result.n_escaped[t],
                    csv=render_density_csv(grid, t),
                )
                for t, grid in sorted(result.snapshots.items())
            ]
        )

    @app.post("/validation/convergence", response_model=ConvergenceResponse)
    def validation_convergence(req: ConvergenceRequest):
        config = ValidationConfig(dt=req.dt, t_final=req.t_final, seed=req.seed)
        study = convergence_study(config, req.n_values, n_seeds=req.n_seeds)
        return ConvergenceResponse(
            points=study.points,
            slope=study.slope,
            csv=render_error_csv(study.points),
        )

    return app
