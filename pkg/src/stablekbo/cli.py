"""Command-line client for the optimization service.

By default the commands talk to an in-process instance of the app, so no
server needs to be running; ``--server URL`` points them at a remote one
instead.  ``serve`` starts the HTTP server itself.
"""

from __future__ import annotations

import argparse
import os
import sys

from .harness import S52_DEFAULTS, WORKERS_ENV_VAR, parse_config, preset_names

EXIT_OK = 0
EXIT_ERROR = 1


class ClientError(RuntimeError):
    pass


class ServiceClient:
    """Minimal JSON client; in-process ASGI transport unless a server URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def _check(self, response):
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise ClientError(f"service error ({response.status_code}): {detail}")
        return response.json()

    def get(self, path: str, params: dict | None = None):
        return self._check(self._client.get(path, params=params))

    def post(self, path: str, payload: dict):
        return self._check(self._client.post(path, json=payload))


def _add_config_flags(parser: argparse.ArgumentParser):
    grp = parser.add_argument_group("run parameters")
    grp.add_argument("--nu", type=float)
    grp.add_argument("--sigma", type=float)
    grp.add_argument("--gamma", type=float)
    grp.add_argument("--alpha", type=float)
    grp.add_argument("--beta", type=float)
    grp.add_argument("--dt", type=float)
    grp.add_argument("--n-t", type=int, dest="n_t")
    grp.add_argument("--n-particles", type=int, dest="n_particles")
    grp.add_argument("--diffusion-mode", choices=("isotropic", "anisotropic"),
                     dest="diffusion_mode")
    grp.add_argument("--delta-stall", type=float, dest="delta_stall")
    grp.add_argument("--j-stall", type=int, dest="j_stall")
    grp.add_argument("--init-lo", type=float, dest="init_lo")
    grp.add_argument("--init-hi", type=float, dest="init_hi")
    grp.add_argument("--noise-clip", type=float, dest="noise_clip")
    grp.add_argument("--stall-mode", choices=("consecutive", "cumulative"),
                     dest="stall_mode")


def _collect_overrides(args, keys) -> dict:
    return {key: getattr(args, key) for key in keys if getattr(args, key, None) is not None}


_SPEC_KEYS = (
    "objective", "dim", "sweep", "m_runs", "base_seed", "iters_success_only",
    "workers", "nu", "sigma", "gamma", "alpha", "beta", "dt", "n_t",
    "n_particles", "diffusion_mode", "delta_stall", "j_stall", "init_lo",
    "init_hi", "noise_clip", "stall_mode",
)


def _cmd_run(args) -> int:
    from .harness import _parse_values

    overrides = _collect_overrides(args, _SPEC_KEYS)
    if args.values is not None:
        overrides["values"] = _parse_values(args.values)
    if args.config:
        spec = parse_config(args.config, overrides=overrides)
    else:
        from .harness import parse_config_text

        spec = parse_config_text("", overrides=overrides, source="<flags>")

    payload = {
        "objective": spec.objective, "dim": spec.dim, "sweep": spec.sweep,
        "values": list(spec.values), "m_runs": spec.m_runs,
        "base_seed": spec.base_seed, "iters_success_only": spec.iters_success_only,
        "workers": spec.workers, "nu": spec.nu, "sigma": spec.sigma,
        "gamma": spec.gamma, "alpha": spec.alpha, "beta": spec.beta,
        "dt": spec.dt, "n_t": spec.n_t, "n_particles": spec.n_particles,
        "diffusion_mode": spec.diffusion_mode, "delta_stall": spec.delta_stall,
        "j_stall": spec.j_stall, "init_lo": spec.init_lo, "init_hi": spec.init_hi,
        "noise_clip": spec.noise_clip, "stall_mode": spec.stall_mode,
    }
    body = ServiceClient(args.server).post("/experiments", payload)
    output = args.output or spec.output
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(body["csv"])
        print(f"wrote {output}")
    else:
        sys.stdout.write(body["csv"])
    for row in body["results"]:
        print(f"axis={row['axis']}: success_rate={row['success_rate']:.3f} "
              f"mean_iterations={row['mean_iterations']:.1f}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args) -> int:
    client = ServiceClient(args.server)
    os.makedirs(args.out_dir, exist_ok=True)

    density = client.post("/validation/density", {
        "n_particles": args.n_particles,
        "seed": args.base_seed,
        "snapshot_times": [float(t) for t in args.times.split(",")],
        "m_x": args.m_x,
    })
    for snap in density["snapshots"]:
        path = os.path.join(args.out_dir, f"validate_density_t{snap['t']:g}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(snap["csv"])
        print(f"t={snap['t']:g}: linf_error={snap['linf_error']:.5f} "
              f"mass={snap['mass']:.4f} escaped={snap['n_escaped']} -> {path}")

    conv = client.post("/validation/convergence", {
        "n_values": [int(v) for v in args.n_values.split(",")],
        "n_seeds": args.n_seeds,
        "seed": args.base_seed,
    })
    path = os.path.join(args.out_dir, "validate_error.csv")
    with open(path, "w", newline="") as fh:
        fh.write(conv["csv"])
    print(f"convergence slope={conv['slope']:.4f} -> {path}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    client = ServiceClient(args.server)
    payload = {
        "base_seed": args.base_seed,
        "workers": args.workers,
        "m_runs": args.m_runs,
        "n_t": args.n_t,
        "n_particles": args.n_particles,
    }
    if args.n_values:
        payload["n_values"] = [int(v) for v in args.n_values.split(",")]
    if args.n_seeds:
        payload["n_seeds"] = args.n_seeds
    body = client.post(f"/presets/{args.name}", payload)
    os.makedirs(args.out_dir, exist_ok=True)
    for fname in sorted(body["files"]):
        path = os.path.join(args.out_dir, fname)
        with open(path, "w", newline="") as fh:
            fh.write(body["files"][fname])
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_constants(args) -> int:
    body = ServiceClient(args.server).get("/constants", params={
        "d": args.d, "p": args.p, "alpha": args.alpha,
        "nu": args.nu, "gamma": args.gamma,
    })
    for key in ("b_p_alpha", "c_p_alpha", "omega_d", "condition_ok"):
        print(f"{key} = {body[key]}")
    return EXIT_OK


def _cmd_objectives(args) -> int:
    for info in ServiceClient(args.server).get("/objectives"):
        kind = "differentiable" if info["differentiable"] else "non-differentiable"
        print(f"{info['name']} ({kind})")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablekbo",
        description="Consensus optimization with alpha-stable jumps: experiments, "
                    "validation and theory constants.",
    )
    parser.add_argument("--server", help="URL of a running service; default is in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a parameter sweep and emit CSV")
    p_run.add_argument("--config", help="flat key = value experiment file")
    p_run.add_argument("--objective", choices=None)
    p_run.add_argument("--dim", type=int)
    p_run.add_argument("--sweep", choices=("gamma", "sigma", "dim", "objective"))
    p_run.add_argument("--values", help="comma-separated sweep values")
    p_run.add_argument("--m-runs", type=int, dest="m_runs")
    p_run.add_argument("--base-seed", type=int, dest="base_seed")
    p_run.add_argument("--iters-success-only", action="store_const", const=True,
                       dest="iters_success_only",
                       help="average iterations over successful runs only")
    p_run.add_argument("--workers", type=int,
                       help=f"run-level parallelism (default: ${WORKERS_ENV_VAR} or CPU count)")
    p_run.add_argument("--output", help="CSV output path (default: stdout)")
    _add_config_flags(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_val = sub.add_parser("validate", help="exact-solution validation and error scaling")
    p_val.add_argument("--n-particles", type=int, default=10**5, dest="n_particles")
    p_val.add_argument("--times", default="0.1,1,2", help="snapshot times")
    p_val.add_argument("--n-values", default="1000,10000,100000", dest="n_values",
                       help="particle counts for the error sweep")
    p_val.add_argument("--n-seeds", type=int, default=5, dest="n_seeds")
    p_val.add_argument("--m-x", type=int, default=2**10, dest="m_x")
    p_val.add_argument("--base-seed", type=int, default=0, dest="base_seed")
    p_val.add_argument("--out-dir", default=".", dest="out_dir")
    p_val.set_defaults(handler=_cmd_validate)

    p_pre = sub.add_parser("preset", help="run a built-in experiment preset")
    p_pre.add_argument("name", choices=preset_names())
    p_pre.add_argument("--out-dir", default=".", dest="out_dir")
    p_pre.add_argument("--base-seed", type=int, dest="base_seed")
    p_pre.add_argument("--workers", type=int)
    p_pre.add_argument("--m-runs", type=int, dest="m_runs",
                       help="override runs per axis value (scaled-down preset)")
    p_pre.add_argument("--n-t", type=int, dest="n_t", help="override iteration cap")
    p_pre.add_argument("--n-particles", type=int, dest="n_particles")
    p_pre.add_argument("--n-values", dest="n_values",
                       help="validate preset: comma-separated particle counts")
    p_pre.add_argument("--n-seeds", type=int, dest="n_seeds",
                       help="validate preset: seeds per particle count")
    p_pre.set_defaults(handler=_cmd_preset)

    p_const = sub.add_parser("constants", help="print the decay-rate constants")
    p_const.add_argument("--d", type=int, required=True)
    p_const.add_argument("--p", type=float, required=True)
    p_const.add_argument("--alpha", type=float, required=True)
    p_const.add_argument("--nu", type=float, default=1.0)
    p_const.add_argument("--gamma", type=float, default=1.0)
    p_const.set_defaults(handler=_cmd_constants)

    p_obj = sub.add_parser("objectives", help="list registered objectives")
    p_obj.set_defaults(handler=_cmd_objectives)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(handler=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ClientError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
