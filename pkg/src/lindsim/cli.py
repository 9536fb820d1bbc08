"""Command-line front end: JSON experiment configs in, CSV/SVG/summary JSON out."""
from __future__ import annotations

import argparse
import hashlib
import inspect
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .experiments import (
    ErrorCurve,
    SweepResult,
    default_grid,
    degenerate_chain,
    error_curve,
    hierarchy_iterate,
    leakage_check,
    regression_scenarios,
    sweep_T,
)
from .hilbert import HilbertSpace, boson, collective_spin, embed, pauli
from .numerics import DEFAULT_TOLERANCES, NumericError, Tolerances
from .protocol import (
    BUILTIN_FACTORIES,
    SimulationProtocol,
    builtin,
    check_protocol,
    compile_target,
    protocol_from_dict,
    protocol_to_dict,
    scale,
)
from .superop import VEC_CONVENTION, LindbladSpec, check_cptp_propagator

NORM_CONVENTION = "spectral norm (max singular value) of (exp(t L_T) - exp(t L_eff)) P0"
EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_ASSERTION = 0, 1, 2, 3, 4
MODES = ("build", "evolve", "sweep", "trace", "regress", "hierarchy")


class ConfigError(ValueError):
    """Config problem found after schema validation; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# --- schema -----------------------------------------------------------------------------

Complex = tuple[float, float]
OperatorSpec = Union[str, list[list[Complex]]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class JumpConfig(_Strict):
    op: OperatorSpec
    rate: float = Field(ge=0)


class ModelConfig(_Strict):
    dims: list[int] = Field(min_length=1)
    hamiltonian: Optional[OperatorSpec] = None
    jumps: list[JumpConfig] = Field(min_length=1)
    damping_times: Union[float, list[float]] = 1.0


class TGridConfig(_Strict):
    points_per_decade: int = Field(default=40, ge=1)
    t_min: Optional[float] = Field(default=None, gt=0)
    # multiple of T for the last grid point; overrides theta (e.g. to run past T)
    t_max_factor: Optional[float] = Field(default=None, gt=0)


class HierarchyConfig(_Strict):
    epsilon: float = Field(default=0.1, gt=0)
    max_levels: int = Field(default=3, ge=1)
    tau: float = Field(default=1.0, gt=0)


class AssertionsConfig(_Strict):
    min_r_squared: Optional[float] = None
    max_intercept_fraction: Optional[float] = None
    ratio_range: Optional[tuple[float, float]] = None
    min_tau_ratio: Optional[float] = None
    max_distance: Optional[float] = None
    max_leakage: Optional[float] = None


class ExperimentConfig(_Strict):
    mode: Optional[Literal["build", "evolve", "sweep", "trace", "regress", "hierarchy"]] = None
    scenario: Optional[str] = None
    params: dict[str, Union[int, float]] = Field(default_factory=dict)
    cutoff: Optional[int] = Field(default=None, ge=2)
    model: Optional[ModelConfig] = None
    protocol_file: Optional[str] = None
    g_mode: Literal["figure", "library"] = "library"
    T: Optional[float] = Field(default=None, gt=0)
    T_list: Optional[list[float]] = None
    theta: float = Field(default=1.0, gt=0)
    t_grid: TGridConfig = Field(default_factory=TGridConfig)
    metric: Literal["sup", "final"] = "sup"
    tolerances: dict[str, float] = Field(default_factory=dict)
    hierarchy: HierarchyConfig = Field(default_factory=HierarchyConfig)
    assertions: AssertionsConfig = Field(default_factory=AssertionsConfig)
    threads: Optional[int] = Field(default=None, ge=1)
    out: Optional[str] = None
    svg: bool = False

    @model_validator(mode="after")
    def _one_source(self):
        given = [n for n in ("scenario", "model", "protocol_file") if getattr(self, n) is not None]
        if len(given) > 1:
            raise ValueError(f"give at most one of scenario, model, protocol_file (got {', '.join(given)})")
        if self.T_list is not None and any(not t > 0 for t in self.T_list):
            raise ValueError("T_list entries must be > 0")
        return self


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path} is not valid JSON: {exc}") from None
    return ExperimentConfig.model_validate(raw)


def config_hash(cfg: ExperimentConfig, tol: Tolerances) -> str:
    """SHA-256 of the canonical config (output location excluded) and effective tolerances."""
    data = cfg.model_dump(mode="json", exclude={"out", "svg", "threads"})
    data["tolerances"] = tol.as_dict()
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- operators and protocols ------------------------------------------------------------

def _parse_kv(parts: list[str], path: str) -> dict[str, int]:
    out = {}
    for part in parts:
        for item in filter(None, part.split(",")):
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(path, f"expected key=value, got {item!r}")
            try:
                out[key.strip()] = int(value)
            except ValueError:
                raise ConfigError(path, f"{key} must be an integer, got {value!r}") from None
    return out


def resolve_operator(spec: OperatorSpec, space: HilbertSpace, path: str) -> np.ndarray:
    """Named builder string or explicit ``[re, im]`` matrix, checked against ``space``.

    Named forms: ``pauli:<x|y|z|plus|minus>:site=i``,
    ``collective_spin:<which>:N=n``, ``boson:<a|adag|n>:cutoff=c,site=i``,
    ``identity``.
    """
    d = space.total_dim
    if isinstance(spec, str):
        head, *rest = spec.split(":")
        try:
            if head == "identity":
                op = np.eye(d, dtype=complex)
            elif head == "pauli":
                which, kv = rest[0], _parse_kv(rest[1:], path)
                op = pauli(which)
                op = embed(op, kv["site"], space) if "site" in kv else op
            elif head == "collective_spin":
                which, kv = rest[0], _parse_kv(rest[1:], path)
                op = collective_spin(kv.get("N", len(space)), which)
            elif head == "boson":
                which, kv = rest[0], _parse_kv(rest[1:], path)
                cutoff = kv.get("cutoff", space.factors[kv.get("site", 0)])
                op = boson(cutoff, which)
                op = embed(op, kv["site"], space) if "site" in kv else op
            else:
                raise ConfigError(path, f"unknown operator builder {head!r}")
        except ConfigError:
            raise
        except (IndexError, KeyError, ValueError) as exc:
            raise ConfigError(path, f"cannot build {spec!r}: {exc}") from None
    else:
        arr = np.asarray(spec, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 2:
            raise ConfigError(path, f"explicit matrix must be square with [re, im] entries, got shape {arr.shape}")
        op = arr[..., 0] + 1j * arr[..., 1]
    if op.shape != (d, d):
        raise ConfigError(path, f"operator is {op.shape[0]}x{op.shape[1]} but declared dims {list(space.factors)} give {d}")
    return op


def build_protocol(cfg: ExperimentConfig) -> SimulationProtocol:
    if cfg.protocol_file is not None:
        try:
            data = json.loads(Path(cfg.protocol_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("protocol_file", str(exc)) from None
        p = protocol_from_dict(data)
    elif cfg.model is not None:
        m = cfg.model
        for i, dim in enumerate(m.dims):
            if dim < 2:
                raise ConfigError(f"model.dims.{i}", f"factor dimension must be >= 2, got {dim}")
        space = HilbertSpace(m.dims)
        h = None if m.hamiltonian is None else resolve_operator(m.hamiltonian, space, "model.hamiltonian")
        jumps = [(resolve_operator(j.op, space, f"model.jumps.{i}.op"), j.rate) for i, j in enumerate(m.jumps)]
        taus = m.damping_times
        if isinstance(taus, list) and len(taus) != len(jumps):
            raise ConfigError("model.damping_times", f"{len(taus)} values for {len(jumps)} jumps")
        for i, tau in enumerate([taus] if not isinstance(taus, list) else taus):
            if not tau > 0:
                raise ConfigError("model.damping_times", f"entry {i} must be > 0, got {tau}")
        try:
            p = compile_target(LindbladSpec(space, h, jumps), taus, cfg.theta)
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from None
    else:
        name = cfg.scenario or "collective-thermal"
        if name not in BUILTIN_FACTORIES:
            raise ConfigError("scenario", f"unknown scenario {name!r}; available: {', '.join(sorted(BUILTIN_FACTORIES))}")
        params = dict(cfg.params)
        accepted = inspect.signature(BUILTIN_FACTORIES[name]).parameters
        if cfg.cutoff is not None:
            if "cutoff" not in accepted:
                raise ConfigError("cutoff", f"scenario {name!r} has no boson cutoff")
            params["cutoff"] = cfg.cutoff
        for key in params:
            if key not in accepted:
                raise ConfigError(f"params.{key}", f"not a parameter of {name!r}; accepted: {', '.join(accepted)}")
        try:
            p = builtin(name, **params)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None
    p.theta = cfg.theta
    return p


# --- output -----------------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{float(x):.17g}"


def emit_csv(result, path: str | Path, config_hash: str = "", metric: str = "sup") -> None:
    """Write a SweepResult or ErrorCurve as CSV with one ``#`` header line."""
    if isinstance(result, SweepResult):
        err_col = "sup_error" if metric == "sup" else "final_error"
        columns = ["T", "inv_sqrt_T", err_col, "fit_prediction"]
        errors = result.sup_errors if metric == "sup" else result.final_errors
        rows = zip(result.T_values, result.inv_sqrt_T, errors, result.fit_prediction)
    elif isinstance(result, ErrorCurve):
        columns = ["t", "log10_t", "distance"]
        with np.errstate(divide="ignore"):
            logs = np.log10(result.t_grid)
        rows = zip(result.t_grid, logs, result.distances)
    else:
        raise TypeError(f"cannot write {type(result).__name__} as CSV")
    _write_table(path, columns, [[_fmt(x) for x in row] for row in rows], config_hash)


def _write_table(path, columns: list[str], rows: list[list[str]], config_hash: str) -> None:
    path = Path(path)
    header = f"# config_hash={config_hash}; columns={','.join(columns)}; vec={VEC_CONVENTION}; norm={NORM_CONVENTION}\n"
    try:
        with path.open("w", newline="") as fh:
            fh.write(header)
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def emit_svg(result, path: str | Path, title: str = "") -> None:
    """Scatter of the CSV columns, with the fit line for sweeps."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "lindsim"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if isinstance(result, SweepResult):
        x = result.inv_sqrt_T
        ax.scatter(x, result.errors, s=14, label=f"{result.metric} error")
        xs = np.linspace(0, x.max() * 1.05, 50)
        ax.plot(xs, result.fit_slope * xs + result.fit_intercept, lw=1, label="least-squares fit")
        ax.set_xlabel("1/sqrt(T)")
        ax.set_ylabel("distance")
    elif isinstance(result, ErrorCurve):
        keep = result.t_grid > 0
        ax.plot(np.log10(result.t_grid[keep]), result.distances[keep], lw=1, label=f"T = {result.T:g}")
        ax.set_xlabel("log10(t)")
        ax.set_ylabel("distance")
    else:
        plt.close(fig)
        raise TypeError(f"cannot plot {type(result).__name__}")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
    finally:
        plt.close(fig)


# --- subcommands ------------------------------------------------------------------------

class Run:
    """State shared by one CLI invocation."""

    def __init__(self, cfg: ExperimentConfig, tol: Tolerances, out: Path, threads: int, svg: bool):
        self.cfg, self.tol, self.out, self.threads, self.svg = cfg, tol, out, threads, svg
        self.hash = config_hash(cfg, tol)
        self.assertions: list[dict] = []
        self.outputs: list[str] = []
        self.info: dict = {}

    def check(self, name: str, value: float, passed: bool, threshold) -> None:
        self.assertions.append({"name": name, "value": value, "threshold": threshold, "passed": bool(passed)})

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def t_values(self, default: list[float]) -> list[float]:
        if self.cfg.T_list is not None:
            return list(self.cfg.T_list)
        if self.cfg.T is not None:
            return [self.cfg.T]
        return default


def _curve(run: Run, protocol: SimulationProtocol, T: float) -> ErrorCurve:
    g = run.cfg.t_grid
    model = scale(protocol, T, run.cfg.g_mode, protocol.spectral(run.tol), run.tol)
    theta = g.t_max_factor if g.t_max_factor is not None else run.cfg.theta
    grid = default_grid(model, g.points_per_decade, theta, g.t_min)
    if protocol.boson_site is not None:
        rep = leakage_check(model, grid[:: max(1, g.points_per_decade)])
        run.info.setdefault("leakage", {})[f"{T:g}"] = rep.max_population
        if run.cfg.assertions.max_leakage is not None:
            run.check(f"leakage T={T:g}", rep.max_population, rep.max_population <= run.cfg.assertions.max_leakage,
                      run.cfg.assertions.max_leakage)
    return error_curve(model, grid)


def cmd_build(run: Run) -> None:
    p = build_protocol(run.cfg)
    report = check_protocol(p, run.tol)
    sd = p.spectral(run.tol)
    gs = p.couplings
    print(f"protocol: {p.name}")
    print(f"system dims = {list(p.system_space.factors)}, bath dims = {list(p.bath_dims)}")
    print(f"M = {p.n_ancillas}")
    print("g = " + (f"{gs[0]:.12g}" if len(gs) == 1 else "[" + ", ".join(f"{g:.12g}" for g in gs) + "]"))
    if p.damping_times is not None:
        print("tau = [" + ", ".join(f"{t:.12g}" for t in p.damping_times) + "]")
    print(f"tau_R = ||S|| = {sd.tau_r:.12g}, gap = {sd.gap:.12g}, first-order norm = {report['first_order_norm']:.3e}")
    run.check("k_hermitian", report["k_hermitian"], report["k_hermitian"] == 1.0, 1.0)
    run.check("first_order_vanishes", report["first_order_norm"], report["first_order_norm"] <= run.tol.oracle_abs, run.tol.oracle_abs)
    for t in (0.1, 1.0, 10.0):
        rep = check_cptp_propagator(p.l0, t, run.tol)
        run.check(f"L0 CPTP t={t:g}", rep.choi_min_eig, rep.ok(run.tol), -run.tol.psd_abs)
    path = run.path("protocol.json")
    try:
        path.write_text(json.dumps(protocol_to_dict(p), indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write protocol to {path}: {exc}") from exc
    print(f"serialized protocol: {path}")


def cmd_evolve(run: Run) -> None:
    p = build_protocol(run.cfg)
    T = run.t_values([100.0])[0]
    curve = _curve(run, p, T)
    emit_csv(curve, run.path("evolve.csv"), run.hash)
    if run.svg:
        emit_svg(curve, run.path("evolve.svg"), p.name)
    run.info.update(T=T, sup_error=curve.sup_error, final_error=curve.final_error)
    print(f"T = {T:g}: sup error {curve.sup_error:.6e}, final error {curve.final_error:.6e}")


def cmd_sweep(run: Run) -> None:
    p = build_protocol(run.cfg)
    Ts = run.t_values(list(np.logspace(2, 4, 8)))
    try:
        res = sweep_T(p, Ts, run.cfg.g_mode, run.cfg.t_grid.points_per_decade, run.cfg.theta,
                      run.cfg.metric, run.threads, run.tol)
    except ValueError as exc:
        raise ConfigError("T_list", str(exc)) from None
    emit_csv(res, run.path("sweep.csv"), run.hash, run.cfg.metric)
    if run.svg:
        emit_svg(res, run.path("sweep.svg"), p.name)
    errs = res.errors
    frac = abs(res.fit_intercept) / errs.max() if errs.max() > 0 else 0.0
    run.info.update(fit_slope=res.fit_slope, fit_intercept=res.fit_intercept, r_squared=res.r_squared,
                    degenerate=res.degenerate, intercept_fraction=frac)
    a = run.cfg.assertions
    if a.min_r_squared is not None:
        run.check("r_squared", res.r_squared, (not res.degenerate) and res.r_squared >= a.min_r_squared, a.min_r_squared)
    if a.max_intercept_fraction is not None:
        run.check("intercept_fraction", frac, frac <= a.max_intercept_fraction, a.max_intercept_fraction)
    print(f"slope {res.fit_slope:.6g}, intercept {res.fit_intercept:.6g} ({100 * frac:.2f}% of max), r^2 = {res.r_squared:.6f}")


def cmd_trace(run: Run) -> None:
    p = build_protocol(run.cfg)
    Ts = run.t_values([100.0, 1000.0])
    sups = []
    for T in Ts:
        curve = _curve(run, p, T)
        sups.append(curve.sup_error)
        emit_csv(curve, run.path(f"trace_T{T:g}.csv"), run.hash)
        if run.svg:
            emit_svg(curve, run.path(f"trace_T{T:g}.svg"), p.name)
        print(f"T = {T:g}: max distance {curve.sup_error:.6e}")
    run.info["sup_errors"] = dict(zip((f"{T:g}" for T in Ts), sups))
    if len(Ts) >= 2 and sups[-1] > 0:
        ratio = sups[0] / sups[-1]
        run.info["max_error_ratio"] = ratio
        print(f"ratio of maximum distances: {ratio:.4f} (sqrt of T ratio: {math.sqrt(Ts[-1] / Ts[0]):.4f})")
        if run.cfg.assertions.ratio_range is not None:
            lo, hi = run.cfg.assertions.ratio_range
            run.check("max_error_ratio", ratio, lo <= ratio <= hi, [lo, hi])


def cmd_regress(run: Run) -> None:
    threshold = run.cfg.assertions.max_distance or 1e-8
    results = regression_scenarios(run.tol, threshold)
    columns = ["scenario", "distance", "factorization_residual", "gks_residual", "max_rate_error", "passed"]
    rows = []
    for r in results:
        rate_err = max(abs(a - b) for a, b in zip(r.expected_rates, r.extracted_rates))
        passed = r.passed and rate_err <= threshold
        rows.append([r.name, _fmt(r.distance), _fmt(r.factorization_residual), _fmt(r.gks_residual), _fmt(rate_err), str(passed)])
        run.check(r.name, r.distance, passed, threshold)
        print(f"{'PASS' if passed else 'FAIL'} {r.name}: distance {r.distance:.3e}, rate error {rate_err:.3e}")
    _write_table(run.path("regress.csv"), columns, rows, run.hash)


def cmd_hierarchy(run: Run) -> None:
    h = run.cfg.hierarchy
    l0, ks = degenerate_chain(h.tau)
    levels = hierarchy_iterate(l0, ks, h.epsilon, h.max_levels, run.tol)
    columns = ["level", "p0_dim", "tau_r", "k_norm", "epsilon", "first_order_norm", "status"]
    rows = [[str(lv.level), str(lv.p0_dim), _fmt(lv.tau_r), _fmt(lv.k_norm), _fmt(lv.epsilon), _fmt(lv.first_order_norm), lv.status]
            for lv in levels]
    _write_table(run.path("hierarchy.csv"), columns, rows, run.hash)
    for lv in levels:
        print(f"level {lv.level}: manifold dim {lv.p0_dim}, tau_R {lv.tau_r:.6g}, status {lv.status}")
    if len(levels) >= 2:
        ratio = levels[1].tau_r / levels[0].tau_r
        run.info["tau_ratio"] = ratio
        need = run.cfg.assertions.min_tau_ratio
        if need is None:
            need = 0.1 / h.epsilon**2
        run.check("tau_ratio", ratio, ratio >= need, need)


COMMANDS = {
    "build": cmd_build,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "trace": cmd_trace,
    "regress": cmd_regress,
    "hierarchy": cmd_hierarchy,
}


# --- entry point ------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lindsim", description="Dissipative Lindbladian simulation experiments.")
    ap.add_argument("command", choices=MODES)
    ap.add_argument("--config", help="JSON experiment config (defaults apply when omitted)")
    ap.add_argument("--out", help="output directory (default: config 'out' or ./lindsim-out)")
    ap.add_argument("--svg", action="store_true", help="also write SVG plots")
    ap.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    ap.add_argument("--threads", type=int, help="worker threads for sweeps (fallback: LF_THREADS)")
    return ap


def _threads(args, cfg: ExperimentConfig) -> int:
    if args.threads is not None:
        n = args.threads
    elif cfg.threads is not None:
        n = cfg.threads
    elif os.environ.get("LF_THREADS"):
        try:
            n = int(os.environ["LF_THREADS"])
        except ValueError:
            raise ConfigError("LF_THREADS", f"must be an integer, got {os.environ['LF_THREADS']!r}") from None
    else:
        n = 1
    if n < 1:
        raise ConfigError("--threads", f"must be >= 1, got {n}")
    return n


def _tolerances(cfg: ExperimentConfig, overrides: list[str]) -> Tolerances:
    values = dict(cfg.tolerances)
    for item in overrides:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("--tol", f"expected NAME=VALUE, got {item!r}")
        try:
            values[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {name}", f"not a number: {value!r}") from None
    try:
        return DEFAULT_TOLERANCES.with_overrides(**values)
    except ValueError as exc:
        raise ConfigError("tolerances", str(exc)) from None


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def run(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if cfg.mode is not None and cfg.mode != args.command:
            raise ConfigError("mode", f"config is for {cfg.mode!r} but command is {args.command!r}")
        tol = _tolerances(cfg, args.tol)
        out = Path(args.out or cfg.out or "lindsim-out")
        session = Run(cfg, tol, out, _threads(args, cfg), args.svg or cfg.svg)
    except ValidationError as exc:
        print(f"error: invalid config: {_format_validation(exc)}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    code = EXIT_OK
    error = None
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](session)
    except ConfigError as exc:
        error, code = f"invalid config: {exc}", EXIT_VALIDATION
    except (NumericError, np.linalg.LinAlgError) as exc:
        error, code = f"numeric failure: {exc}", EXIT_NUMERIC
    except OSError as exc:
        error, code = str(exc), EXIT_IO
    if error is None and not all(a["passed"] for a in session.assertions):
        code = EXIT_ASSERTION

    summary = {
        "command": args.command,
        "config_hash": session.hash,
        "tolerances": tol.as_dict(),
        "assertions": session.assertions,
        "passed": error is None and all(a["passed"] for a in session.assertions),
        "exit_code": code,
        "error": error,
        "outputs": session.outputs,
        "results": session.info,
        "wall_clock_s": time.perf_counter() - started,
    }
    try:
        (out / "summary.json").write_text(json.dumps(summary, indent=1, default=float) + "\n")
    except OSError as exc:
        print(f"error: cannot write summary to {out}: {exc}", file=sys.stderr)
        code = code or EXIT_IO
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
    for a in session.assertions:
        if not a["passed"]:
            print(f"assertion failed: {a['name']} = {a['value']} (threshold {a['threshold']})", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
