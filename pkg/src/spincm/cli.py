"""Command-line front end: configuration loading, experiment orchestration,
and CSV / JSON report emission.

Subcommands::

    spincm validate      --config cfg.json
    spincm simulate      --config cfg.json --out DIR [--seed N]
    spincm verify-period --config cfg.json --out DIR [--seed N]
    spincm rank          --config cfg.json --out DIR [--seed N]
    spincm bracket-audit --config cfg.json --out DIR [--seed N]

Exit codes: 0 success (checks passed), 1 a verification check failed,
2 configuration error, 3 chamber-boundary abort, 4 unstable rank spectrum,
5 bracket residual above tolerance.  All failures write machine-readable
JSON diagnostics.  Given identical config (including seed), every command
produces byte-identical primary output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dynamics, gauge, rootdata, superint
from .errors import ChamberBoundary, ConfigError, RankUnstable, SpincmError
from .gauge import ReducedBn, ReducedGH, ReducedLie, reduced_distance
from .params import Family, ModelParams, validate

WORKERS_ENV = "SPINCM_WORKERS"

_TOLERANCE_KEYS = {"integrator", "period_distance", "genericity_floor",
                   "oracle_distance", "constraint"}
_DEFAULT_TOLERANCES = {
    "integrator": 1e-10,
    "period_distance": 1e-6,
    "genericity_floor": 0.1,
    "oracle_distance": 1e-6,
    "constraint": 1e-8,
}
_RANK_KEYS = {"max_len_cap", "svd_tol", "fd_step", "resolved_letters"}
_BRACKET_KEYS = {"num_points", "fd_step", "tol_canonical", "tol_antisym",
                 "tol_jacobi", "tol_casimir"}
_TOP_KEYS = {"params", "seed", "initial_condition", "sample_count", "t_end",
             "tolerances", "num_seeds", "rank_options", "bracket_options"}


class ExperimentConfig:
    """Validated experiment configuration (see README for the schema)."""

    def __init__(self, doc: dict):
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "params" not in doc:
            raise ConfigError("configuration must contain 'params'")
        try:
            self.params = ModelParams.from_dict(doc["params"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad model parameters: {exc}") from exc
        report = validate(self.params)
        if not report.valid:
            raise ConfigError("invalid model parameters: "
                              + "; ".join(report.violations))
        self.validation = report

        self.seed = int(doc.get("seed", 0))
        self.initial_condition = doc.get("initial_condition", "random")
        self.sample_count = int(doc.get("sample_count", 33))
        if self.sample_count < 2:
            raise ConfigError("sample_count must be >= 2")
        self.t_end = float(doc.get("t_end", self.params.period))
        if not (self.t_end > 0):
            raise ConfigError("t_end must be positive")
        self.num_seeds = int(doc.get("num_seeds", 1))
        if self.num_seeds < 1:
            raise ConfigError("num_seeds must be >= 1")

        tol = dict(_DEFAULT_TOLERANCES)
        extra = doc.get("tolerances", {})
        unknown = set(extra) - _TOLERANCE_KEYS
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        tol.update(extra)
        if any(not (float(v) > 0) for v in tol.values()):
            raise ConfigError("tolerances must be positive")
        self.tolerances = {k: float(v) for k, v in tol.items()}

        rank = {"max_len_cap": 6, "svd_tol": 1e-8, "fd_step": 1e-5,
                "resolved_letters": True}
        extra = doc.get("rank_options", {})
        unknown = set(extra) - _RANK_KEYS
        if unknown:
            raise ConfigError(f"unknown rank option keys: {sorted(unknown)}")
        rank.update(extra)
        self.rank_options = rank

        br = {"num_points": 20, "fd_step": 1e-5, "tol_canonical": 1e-8,
              "tol_antisym": 1e-10, "tol_jacobi": 1e-4, "tol_casimir": 1e-6}
        extra = doc.get("bracket_options", {})
        unknown = set(extra) - _BRACKET_KEYS
        if unknown:
            raise ConfigError(f"unknown bracket option keys: {sorted(unknown)}")
        br.update(extra)
        self.bracket_options = br

    def initial_state(self, seed: int | None = None):
        """Reduced initial condition: explicit from the config, or drawn
        from the seeded generator (chamber-respecting, on-constraint)."""
        if self.initial_condition == "random":
            rng = np.random.default_rng(self.seed if seed is None else seed)
            return dynamics.random_reduced_state(self.params, rng)
        doc = self.initial_condition
        if not isinstance(doc, dict):
            raise ConfigError("initial_condition must be 'random' or an object")
        try:
            return _reduced_from_config(doc, self.params)
        except (KeyError, ValueError, SpincmError) as exc:
            raise ConfigError(f"bad initial_condition: {exc}") from exc


def _reduced_from_config(doc: dict, params: ModelParams):
    from ._linalg import pairs_to_complex

    q = np.asarray(doc["q"], dtype=float)
    p = np.asarray(doc["p"], dtype=float)
    if params.family is Family.GIBBONS_HERMSEN:
        return ReducedGH(q=q, p=p, zeta=pairs_to_complex(doc["zeta"]), c=params.c)
    if params.family is Family.BN_TYPE:
        return ReducedBn(q=q, p=p, zeta=pairs_to_complex(doc["zeta"]),
                         eta=pairs_to_complex(doc["eta"]),
                         c1=params.c1, c2=params.c2)
    return ReducedLie(q=q, p=p, xi=pairs_to_complex(doc["xi"]))


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, doc: dict):
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _csv_text(header: list[str], rows: list[list[float]]) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _trajectory_header(params: ModelParams) -> list[str]:
    n = params.n
    head = ["t"] + [f"q{j+1}" for j in range(n)] + [f"p{j+1}" for j in range(n)]
    head += gauge.spin_column_names(params.family, n, ell=params.ell,
                                    ell1=params.ell1, ell2=params.ell2)
    head += ["energy", "constraint_residual"]
    return head


def write_trajectory_csv(path: str, traj: dynamics.Trajectory, params: ModelParams):
    _atomic_write(path, _csv_text(_trajectory_header(params),
                                  dynamics.trajectory_csv_rows(traj)))


def _fail_json(out_dir: str | None, doc: dict):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out_dir:
        try:
            _write_json(os.path.join(out_dir, "error.json"), doc)
        except OSError:
            pass
    print(text, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(cfg_doc: dict, out_dir: str | None) -> int:
    try:
        params = ModelParams.from_dict(cfg_doc.get("params", cfg_doc))
    except (ValueError, TypeError) as exc:
        _fail_json(out_dir, {"error": "config", "detail": str(exc)})
        return 2
    report = validate(params)
    doc = {"params": params.to_dict(), **report.to_dict()}
    if out_dir:
        _write_json(os.path.join(out_dir, "validation.json"), doc)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0 if report.valid else 2


def cmd_simulate(cfg: ExperimentConfig, out_dir: str) -> int:
    params = cfg.params
    state0 = cfg.initial_state()
    ts = np.linspace(0.0, cfg.t_end, cfg.sample_count)
    integrated = dynamics.integrate(state0, params, cfg.t_end,
                                    tol=cfg.tolerances["integrator"],
                                    sample_times=ts)
    projected = dynamics.project_flow(gauge.embed(state0, params), params, ts)
    dist = dynamics.compare_trajectories(integrated, projected)

    write_trajectory_csv(os.path.join(out_dir, "integrated.csv"), integrated, params)
    write_trajectory_csv(os.path.join(out_dir, "projected.csv"), projected, params)
    _atomic_write(os.path.join(out_dir, "comparison.csv"),
                  _csv_text(["t", "reduced_distance"],
                            [[t, d] for t, d in zip(projected.times, dist)]))
    summary = {
        "params": params.to_dict(),
        "seed": cfg.seed,
        "t_end": cfg.t_end,
        "sample_count": cfg.sample_count,
        "max_reduced_distance": float(np.max(dist)),
        "energy_drift": float(np.max(np.abs(
            integrated.diagnostics["energy"] - integrated.diagnostics["energy"][0]))),
        "max_constraint_residual": float(np.max(
            integrated.diagnostics["constraint_residual"])),
        "nfev": integrated.diagnostics.get("nfev"),
        "failed_projection_samples": projected.diagnostics["failed_samples"],
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    print(f"max reduced distance over {cfg.sample_count} samples: "
          f"{summary['max_reduced_distance']:.3e}")
    return 0


def _period_single(cfg: ExperimentConfig, seed: int) -> dict:
    params = cfg.params
    T = params.period
    state0 = cfg.initial_state(seed=seed)
    ts = np.array([0.0, T / 4, T / 2, 3 * T / 4, T])
    traj = dynamics.integrate(state0, params, T,
                              tol=cfg.tolerances["integrator"], sample_times=ts)
    dists = {f"T*{frac}": reduced_distance(traj.states[0], traj.states[i])
             for i, frac in ((1, 0.25), (2, 0.5), (3, 0.75), (4, 1.0))}
    return {"seed": seed, "distances": dists}


def cmd_verify_period(cfg: ExperimentConfig, out_dir: str) -> int:
    params = cfg.params
    tol = cfg.tolerances["period_distance"]
    floor = cfg.tolerances["genericity_floor"]
    half = cfg.validation.metadata["half_period_regime"]
    seeds = [cfg.seed + k for k in range(cfg.num_seeds)]
    workers = max(1, int(os.environ.get(WORKERS_ENV, "1")))
    if workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _period_single(cfg, s), seeds))
    else:
        results = [_period_single(cfg, s) for s in seeds]

    for r in results:
        d = r["distances"]
        if half:
            r["pass"] = d["T*0.5"] <= tol and d["T*1.0"] <= tol
        else:
            r["pass"] = d["T*1.0"] <= tol and d["T*0.5"] >= floor
    overall = all(r["pass"] for r in results)
    doc = {
        "params": params.to_dict(),
        "period": T_val(params),
        "half_period_regime": half,
        "tolerance": tol,
        "genericity_floor": None if half else floor,
        "results": results,
        "pass": overall,
    }
    _write_json(os.path.join(out_dir, "period_report.json"), doc)
    print(f"period check: {'PASS' if overall else 'FAIL'} "
          f"({len(results)} initial condition(s), "
          f"{'half-period regime' if half else 'full period'})")
    return 0 if overall else 1


def T_val(params: ModelParams) -> float:
    return params.period


def cmd_rank(cfg: ExperimentConfig, out_dir: str) -> int:
    params = cfg.params
    if params.family is Family.LIE_A:
        raise ConfigError("rank certification supports the GibbonsHermsen "
                          "and BnType families")
    opts = cfg.rank_options
    point = cfg.initial_state()
    result = superint.saturate_rank(point, params,
                                    resolved=bool(opts["resolved_letters"]),
                                    max_len_cap=int(opts["max_len_cap"]),
                                    fd_step=float(opts["fd_step"]),
                                    svd_tol=float(opts["svd_tol"]))
    doc = {
        "params": params.to_dict(),
        "seed": cfg.seed,
        "resolved_letters": bool(opts["resolved_letters"]),
        "expected_maximal_rank": superint.dim_reduced(params) - 1,
        **result.to_dict(),
    }
    _write_json(os.path.join(out_dir, "rank_report.json"), doc)
    print(f"rank = {result.report.rank} "
          f"(dim - 1 = {superint.dim_reduced(params) - 1}, "
          f"saturated = {result.saturated}, gap = {result.report.gap:.2e})")
    return 0


def _random_polynomial(rng: np.random.Generator, dim: int):
    """Seeded smooth test observable: random quadratic in the flat real
    coordinates (q, p, Re xi_{j<k}, Im xi_{j<k})."""
    a = rng.normal(size=dim)
    B = rng.normal(size=(dim, dim)) / dim
    B = 0.5 * (B + B.T)

    def f(q, p, xi):
        iu = np.triu_indices(len(q), 1)
        v = np.concatenate([q, p, xi[iu].real, xi[iu].imag])
        return float(a @ v + v @ B @ v)

    return f


def cmd_bracket_audit(cfg: ExperimentConfig, out_dir: str) -> int:
    params = cfg.params
    if params.family is not Family.LIE_A:
        raise ConfigError("bracket-audit applies to the LieA family")
    opts = cfg.bracket_options
    n = params.n
    fd = float(opts["fd_step"])
    rng = np.random.default_rng(cfg.seed)
    dim = 2 * n + n * (n - 1)
    num_points = int(opts["num_points"])

    worst = {"canonical": 0.0, "antisymmetry": 0.0, "jacobi": 0.0, "casimir": 0.0}
    for _ in range(num_points):
        st = dynamics.random_reduced_state(params, rng)
        q, p, xi = st.q, st.p, st.xi

        for j in range(n):
            for k in range(n):
                fj = (lambda jj: lambda q_, p_, x_: float(q_[jj]))(j)
                gk = (lambda kk: lambda q_, p_, x_: float(p_[kk]))(k)
                val = rootdata.reduced_bracket_lie(fj, gk, q, p, xi, fd_step=fd)
                worst["canonical"] = max(worst["canonical"],
                                         abs(val - (1.0 if j == k else 0.0)))

        F = _random_polynomial(rng, dim)
        G = _random_polynomial(rng, dim)
        H = _random_polynomial(rng, dim)
        fg = rootdata.reduced_bracket_lie(F, G, q, p, xi, fd_step=fd)
        gf = rootdata.reduced_bracket_lie(G, F, q, p, xi, fd_step=fd)
        worst["antisymmetry"] = max(worst["antisymmetry"], abs(fg + gf))

        outer_fd = 5e-4
        def nest(A, B):
            return lambda q_, p_, x_: rootdata.reduced_bracket_lie(
                A, B, q_, p_, x_, fd_step=fd)
        jac = (rootdata.reduced_bracket_lie(nest(F, G), H, q, p, xi, fd_step=outer_fd)
               + rootdata.reduced_bracket_lie(nest(G, H), F, q, p, xi, fd_step=outer_fd)
               + rootdata.reduced_bracket_lie(nest(H, F), G, q, p, xi, fd_step=outer_fd))
        worst["jacobi"] = max(worst["jacobi"], abs(jac))

        def casimir(q_, p_, x_):
            return float(np.trace(x_ @ x_).real)

        worst["casimir"] = max(worst["casimir"], abs(
            rootdata.reduced_bracket_lie(casimir, F, q, p, xi, fd_step=fd)))

    checks = {
        "canonical": worst["canonical"] <= opts["tol_canonical"],
        "antisymmetry": worst["antisymmetry"] <= opts["tol_antisym"],
        "jacobi": worst["jacobi"] <= opts["tol_jacobi"],
        "casimir": worst["casimir"] <= opts["tol_casimir"],
    }
    doc = {
        "params": params.to_dict(),
        "seed": cfg.seed,
        "num_points": num_points,
        "residuals": worst,
        "tolerances": {k: opts[f"tol_{'antisym' if k == 'antisymmetry' else k}"]
                       for k in checks},
        "checks": checks,
        "pass": all(checks.values()),
    }
    _write_json(os.path.join(out_dir, "bracket_report.json"), doc)
    for name, ok in checks.items():
        print(f"bracket {name}: {'PASS' if ok else 'FAIL'} "
              f"(residual {worst[name]:.3e})")
    return 0 if all(checks.values()) else 5


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spincm",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("validate", "simulate", "verify-period", "rank", "bracket-audit"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail_json(args.out, {"error": "config", "detail": str(exc)})
        return 2
    if args.seed is not None:
        doc = dict(doc)
        doc["seed"] = args.seed

    if args.command == "validate":
        return cmd_validate(doc, args.out)

    out_dir = args.out
    if out_dir is None:
        _fail_json(None, {"error": "config", "detail": "--out is required"})
        return 2
    try:
        cfg = ExperimentConfig(doc)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "verify-period":
            return cmd_verify_period(cfg, out_dir)
        if args.command == "rank":
            return cmd_rank(cfg, out_dir)
        if args.command == "bracket-audit":
            return cmd_bracket_audit(cfg, out_dir)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        _fail_json(out_dir, {"error": "config", "detail": str(exc)})
        return 2
    except ChamberBoundary as exc:
        _fail_json(out_dir, {"error": "chamber_boundary", "detail": str(exc),
                             "exit_time": exc.exit_time})
        return 3
    except RankUnstable as exc:
        _fail_json(out_dir, {"error": "rank_unstable", "detail": str(exc)})
        return 4


if __name__ == "__main__":
    sys.exit(main())
