"""Experiment runner: one subcommand per figure-class experiment, INI-style
configs with flag overrides, and deterministic CSV/JSON tables.

Randomness everywhere comes from numpy's default PCG64 generator seeded
through SeedSequence substreams, so a (config, seed) pair reproduces tables
exactly; reductions are index-ordered, hence bit-stable regardless of the
worker count.  Provenance (the full effective config, package version, wall
time) is embedded in every output file.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from . import __version__, analysis, dynamics, echoes, entanglement, phasespace, qstate

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_RANGE = 3
EXIT_UNKNOWN_KEY = 4
EXIT_RUNTIME = 5


class ConfigError(Exception):
    def __init__(self, code: str, exit_code: int, message: str):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def _parse_error(msg):
    return ConfigError("E_PARSE", EXIT_PARSE, msg)


def _range_error(msg):
    return ConfigError("E_RANGE", EXIT_RANGE, msg)


def _unknown_key_error(msg):
    return ConfigError("E_UNKNOWN_KEY", EXIT_UNKNOWN_KEY, msg)


# ---------------------------------------------------------------------------
# experiment registry

def _positive(x):
    return x > 0


def _pos_int(x):
    return int(x) == x and x >= 1


@dataclass(frozen=True)
class Param:
    name: str
    typ: type
    default: object = ...  # ... marks a required key
    check: object = None


_COMMON = [
    Param("n_max", int, 50, _pos_int),
    Param("seed", int),          # mandatory everywhere
]

EXPERIMENTS: dict[str, dict] = {}


def _register(name, params, runner, help_):
    EXPERIMENTS[name] = {"params": {p.name: p for p in params}, "runner": runner,
                         "help": help_}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    seed: int
    out: str | None = None
    fmt: str = "csv"
    jobs: int | None = None
    deterministic: bool = False

    def effective(self) -> dict:
        d = {"experiment": self.experiment, "seed": self.seed, "format": self.fmt,
             "jobs": self.jobs if self.jobs else "auto",
             "deterministic": self.deterministic}
        d.update(self.params)
        return d


@dataclass
class ResultTable:
    columns: list
    rows: list
    provenance: dict = field(default_factory=dict)


def _coerce(param: Param, raw, where: str):
    try:
        if param.typ is bool:
            if isinstance(raw, bool):
                val = raw
            else:
                low = str(raw).strip().lower()
                if low in ("1", "true", "yes", "on"):
                    val = True
                elif low in ("0", "false", "no", "off"):
                    val = False
                else:
                    raise ValueError(raw)
        elif param.typ is int:
            val = int(str(raw), 0) if not isinstance(raw, (int, np.integer)) else int(raw)
        elif param.typ is float:
            val = float(raw)
        else:
            val = param.typ(raw)
    except (TypeError, ValueError):
        raise _parse_error(f"{where}: cannot parse {param.name} = {raw!r} as {param.typ.__name__}")
    if param.check is not None and not param.check(val):
        raise _range_error(f"{where}: {param.name} = {val!r} is out of range")
    return val


def parse_config(experiment: str | None, config_path: str | None,
                 overrides: dict) -> ExperimentConfig:
    """Merge a key=value config file section with flag overrides.

    The file is INI-style with an [experiment] section; flags win over the
    file.  Unknown keys raise E_UNKNOWN_KEY, malformed values E_PARSE, guard
    violations E_RANGE.
    """
    import configparser

    raw: dict = {}
    if config_path:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str  # keys are case-sensitive (N vs n)
        try:
            with open(config_path) as fh:
                cp.read_file(fh)
        except OSError as e:
            raise _parse_error(f"cannot read config {config_path}: {e}")
        except configparser.Error as e:
            raise _parse_error(f"malformed config {config_path}: {e}")
        if "experiment" not in cp:
            raise _parse_error(f"{config_path}: missing [experiment] section")
        raw = dict(cp["experiment"])
        kind = raw.pop("kind", None)
        if experiment is None:
            experiment = kind
        elif kind is not None and kind != experiment:
            raise _parse_error(
                f"config kind {kind!r} conflicts with requested experiment {experiment!r}")
    if experiment is None:
        raise _parse_error("no experiment selected (subcommand, --experiment or config kind)")
    if experiment not in EXPERIMENTS:
        raise _parse_error(f"unknown experiment {experiment!r}")
    spec = EXPERIMENTS[experiment]["params"]

    merged = dict(raw)
    for key, val in overrides.items():
        if val is not None:
            merged[key] = val

    params = {}
    for key, rawval in merged.items():
        if key == "seed":
            continue
        if key not in spec:
            raise _unknown_key_error(f"unknown key {key!r} for experiment {experiment}")
        params[key] = _coerce(spec[key], rawval, experiment)
    for name, p in spec.items():
        if name == "seed":
            continue
        if name not in params:
            if p.default is ...:
                raise _range_error(f"{experiment}: missing required key {name!r}")
            params[name] = p.default

    if "seed" not in merged or merged["seed"] is None:
        raise _range_error(f"{experiment}: seed is mandatory")
    seed = _coerce(Param("seed", int), merged["seed"], experiment)
    return ExperimentConfig(experiment=experiment, params=params, seed=seed)


# ---------------------------------------------------------------------------
# runners

def _rotator_pair(N, K, dK):
    grid = qstate.TorusGrid(N)
    return grid, dynamics.KickedRotatorFloquet(grid, K), \
        dynamics.KickedRotatorFloquet(grid, K + dK)


def _top_pair(S, K, phi, dK):
    return dynamics.KickedTopFloquet(S, K), dynamics.KickedTopFloquet(S, K, phi=phi, dK=dK)


def _run_loschmidt(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    if p["model"] == "rotator":
        grid, F0, F = _rotator_pair(p["N"], p["K"], p["dK"])
        sampler = echoes.GaussianPacketSampler(grid)
    elif p["model"] == "top":
        F0, F = _top_pair(p["S"], p["K"], p["phi"], p["dK"])
        sampler = echoes.SpinCoherentSampler(p["S"])
    else:
        raise _range_error(f"loschmidt: unknown model {p['model']!r}")
    stats = echoes.ensemble_stats(sampler, F0, F, p["n_max"], p["n_samples"], cfg.seed)
    rows = [(int(t), float(m), float(v))
            for t, m, v in zip(stats.times, stats.mean, stats.variance)]
    return ResultTable(["t", "mean", "variance"], rows)


def _run_prepared(cfg):
    p = cfg.params
    F0, F = _top_pair(p["S"], p["K"], p["phi"], p["dK"])
    sampler = echoes.SpinCoherentSampler(p["S"], K=p["K"] if p["chaotic_only"] else None)
    psis = echoes.sample_batch(sampler, p["n_samples"], cfg.seed)
    psis = np.asarray(F0.apply(psis, p["T"])) if p["T"] else psis
    amp = echoes._amplitude_curves(psis, F0, F, p["n_max"])
    mean = np.clip(np.abs(amp) ** 2, 0, 1).mean(axis=1)
    rows = [(int(t), float(m)) for t, m in enumerate(mean)]
    return ResultTable(["t", "mean"], rows)


def _run_displacement(cfg):
    p = cfg.params
    grid = qstate.TorusGrid(p["N"])
    F0 = dynamics.KickedRotatorFloquet(grid, p["K"])
    disp = echoes.DisplacementSpec(p["kind"], p["m"])
    sampler = echoes.GaussianPacketSampler(grid)
    streams = np.random.SeedSequence(cfg.seed).spawn(p["n_samples"])
    acc = np.zeros(p["n_max"] + 1)
    for s in streams:
        psi0 = sampler.sample(np.random.default_rng(s))
        acc += echoes.displacement_echo(psi0, F0, disp, p["n_max"]).values
    mean = acc / p["n_samples"]
    rows = [(int(t), float(m)) for t, m in enumerate(mean)]
    return ResultTable(["t", "mean"], rows)


def _run_boltzmann(cfg):
    p = cfg.params
    grid = qstate.TorusGrid(p["N"])
    Hf = dynamics.CoupledRotatorFloquet(grid, grid, p["K1"], p["K2"], p["eps"])
    Hb = dynamics.boltzmann_backward(Hf, p["dK1"], p["dK2"])
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    psi1 = echoes.GaussianPacketSampler(grid).sample(np.random.default_rng(seeds[0]))
    series = echoes.boltzmann_echo(psi1, None, Hf, Hb, p["n_max"], p["n_env"],
                                   seed=seeds[1])
    rows = [(int(t), float(v)) for t, v in zip(series.times, series.values)]
    return ResultTable(["t", "value"], rows)


def _run_purity(cfg):
    p = cfg.params
    g1, g2 = qstate.TorusGrid(p["N1"]), qstate.TorusGrid(p["N2"])
    F = dynamics.CoupledRotatorFloquet(g1, g2, p["K1"], p["K2"], p["eps"])
    series = entanglement.purity_ensemble(
        echoes.GaussianPacketSampler(g1), echoes.GaussianPacketSampler(g2),
        F, p["n_max"], p["n_samples"], cfg.seed)
    rows = [(int(t), float(v)) for t, v in zip(series.times, series.values)]
    return ResultTable(["t", "mean_purity"], rows)


def _run_ldos(cfg):
    p = cfg.params
    if p["model"] == "rotator":
        _, F0, F = _rotator_pair(p["N"], p["K"], p["dK"])
        pred = analysis.predicted_gamma("rotator", dK=p["dK"], N=p["N"])
    elif p["model"] == "top":
        F0, F = _top_pair(p["S"], p["K"], p["phi"], 0.0)
        pred = analysis.predicted_gamma("top", phi=p["phi"], S=p["S"])
    else:
        raise _range_error(f"ldos: unknown model {p['model']!r}")
    hist = analysis.ldos(F0, F, nbins=p["nbins"])
    gamma = analysis.lorentzian_fit(hist)
    rows = [(float(c), float(w)) for c, w in zip(hist.centers, hist.weights)]
    table = ResultTable(["alpha", "weight"], rows)
    table.provenance["gamma_fit"] = gamma
    table.provenance["gamma_predicted"] = pred
    return table


def _run_lyapunov(cfg):
    p = cfg.params
    est = dynamics.benettin_lyapunov(p["map"], p["K"], p["n_init"], p["n_steps"],
                                     cfg.seed, transient=p["transient"])
    return ResultTable(
        ["K", "lyapunov", "stderr", "n_init", "n_steps"],
        [(float(p["K"]), est.lyapunov, est.stderr, est.n_init, est.n_steps)])


def _run_wigner(cfg):
    p = cfg.params
    grid = qstate.TorusGrid(p["N"])
    spec = qstate.WavepacketSpec(p["x0"], p["p0"], p["nu"] or qstate.coherent_width(grid))
    psi = qstate.gaussian_torus(grid, spec)
    F = dynamics.KickedRotatorFloquet(grid, p["K"])
    psi = F.apply(psi, p["n_max"])
    W = phasespace.wigner(psi)
    rows = [(float(q), float(pp), float(v))
            for i, q in enumerate(W.q) for pp, v in zip(W.p, W.values[i])]
    return ResultTable(["q", "p", "value"], rows)


def _run_classical_fidelity(cfg):
    p = cfg.params
    rng_seeds = np.random.SeedSequence(cfg.seed).spawn(p["n_patches"])
    ts = np.unique(np.round(np.geomspace(1, p["n_max"], p["n_times"])).astype(int))
    acc = np.zeros(len(ts))
    for s in rng_seeds:
        rng = np.random.default_rng(s)
        if p["map"] == "top":
            z0 = rng.uniform(-0.8, 0.8)
            cloudA = phasespace.gaussian_cloud_sphere(
                np.arccos(z0), rng.uniform(0, 2 * np.pi), p["sigma"], p["n_points"], rng)
        else:
            cloudA = phasespace.gaussian_cloud_torus(
                rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi), p["sigma"],
                p["n_points"], rng)
        cloudB = cloudA
        k = 0
        prevt = 0
        for j, t in enumerate(ts):
            cloudA = phasespace.liouville_propagate(cloudA, p["map"], p["K"], t - prevt)
            cloudB = phasespace.liouville_propagate(cloudB, p["map"], p["K"] + p["dK"], t - prevt)
            prevt = t
            acc[j] += phasespace.classical_fidelity(cloudA, cloudB, p["cell"] or None)
            k += 1
    mean = acc / p["n_patches"]
    rows = [(int(t), float(v)) for t, v in zip(ts, mean)]
    return ResultTable(["t", "fidelity"], rows)


def _run_spin_toy(cfg):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    d = p["d"]

    def goe(scale):
        A = rng.standard_normal((d, d))
        return scale * (A + A.T) / np.sqrt(8 * d)

    H_env = goe(1.0)
    H_up = goe(p["coupling"])
    H_down = goe(p["coupling"])
    phi0 = qstate.random_state(d, rng)
    ts = np.linspace(0.0, p["t_max"], p["n_times"])
    alpha = np.sqrt(p["weight_up"])
    beta = np.sqrt(1.0 - p["weight_up"])
    f, P = entanglement.spin_dephasing_toy(alpha, beta, H_env, H_up, H_down, phi0, ts)
    rows = [(float(t), float(abs(ff)), float(pp)) for t, ff, pp in zip(ts, f, P)]
    return ResultTable(["t", "abs_f", "purity"], rows)


def _run_repro(cfg):
    """Scaled-down acceptance recipes, one pass/fail row each."""
    rows = []

    def record(name, measured, expected, tol_rel):
        ok = abs(measured - expected) <= tol_rel * abs(expected)
        rows.append((name, float(measured), float(expected), float(tol_rel),
                     "pass" if ok else "FAIL"))

    grid = qstate.TorusGrid(128)
    F = dynamics.KickedRotatorFloquet(grid, 9.95)
    psi = qstate.gaussian_torus(grid, qstate.WavepacketSpec(1.0, 2 * np.pi * 17 / 128,
                                                            qstate.coherent_width(grid)))
    dense = np.linalg.matrix_power(F.dense_matrix(), 10) @ psi.amplitudes
    err = float(np.max(np.abs(np.asarray(F.apply(psi, 10).amplitudes) - dense)))
    rows.append(("oracle_fft_vs_dense", err, 0.0, 1e-10, "pass" if err < 1e-10 else "FAIL"))

    est = dynamics.benettin_lyapunov("standard", 10.0, 400, 1200, cfg.seed)
    record("lyapunov_K10", est.lyapunov, np.log(5.0), 0.05)

    N = 1024
    _, F0, F1 = _rotator_pair(N, 9.95, 4.3 / N)
    stats = echoes.ensemble_stats(echoes.GaussianPacketSampler(qstate.TorusGrid(N)),
                                  F0, F1, 30, 60, cfg.seed)
    fit = analysis.fit_exponential((stats.times, stats.mean),
                                   analysis.default_fit_window(stats.mean, N))
    record("golden_rule_rate_N1024", fit.rate, 0.024 * 4.3**2, 0.25)

    psi2 = qstate.random_state(64, cfg.seed)
    W = phasespace.wigner(psi2)
    rows.append(("wigner_norm", W.norm(), 1.0, 1e-10,
                 "pass" if abs(W.norm() - 1) < 1e-10 else "FAIL"))
    tp = phasespace.trace_product(W, W)
    rows.append(("wigner_pure", tp, 1.0, 1e-10,
                 "pass" if abs(tp - 1) < 1e-10 else "FAIL"))

    mean_sat = stats.mean[-8:].mean()
    record("saturation_mean", mean_sat, 1.0 / N, 1.0)

    return ResultTable(["check", "measured", "expected", "tolerance", "status"], rows)


_register("loschmidt", _COMMON + [
    Param("model", str, "rotator"),
    Param("N", int, 1024, _pos_int), Param("K", float, 9.95),
    Param("dK", float, 0.0), Param("S", float, 500),
    Param("phi", float, 0.0), Param("n_samples", int, 50, _pos_int),
], _run_loschmidt, "ensemble-averaged Loschmidt echo")

_register("prepared", _COMMON + [
    Param("S", float, 500), Param("K", float, 3.9), Param("phi", float, 0.0),
    Param("dK", float, 0.0), Param("T", int, 0, lambda x: x >= 0),
    Param("n_samples", int, 50, _pos_int), Param("chaotic_only", bool, True),
], _run_prepared, "prepared-state echo on the kicked top")

_register("displacement", _COMMON + [
    Param("N", int, 4096, _pos_int), Param("K", float, 10.09),
    Param("kind", str, "momentum"), Param("m", float, 1.0),
    Param("n_samples", int, 50, _pos_int),
], _run_displacement, "displacement echo on the kicked rotator")

_register("boltzmann", _COMMON + [
    Param("N", int, 512, _pos_int), Param("K1", float, 10.0), Param("K2", float, 10.0),
    Param("dK1", float, 0.0), Param("dK2", float, 0.0), Param("eps", float, 0.0),
    Param("n_env", int, 20, _pos_int),
], _run_boltzmann, "Boltzmann echo for coupled rotators")

_register("purity", _COMMON + [
    Param("N1", int, 256, _pos_int), Param("N2", int, 256, _pos_int),
    Param("K1", float, 10.09), Param("K2", float, 10.09),
    Param("eps", float, 0.0), Param("n_samples", int, 10, _pos_int),
], _run_purity, "purity decay of coupled rotators")

_register("ldos", [
    Param("seed", int),
    Param("model", str, "rotator"), Param("N", int, 512, _pos_int),
    Param("K", float, 9.95), Param("dK", float, 0.0),
    Param("S", float, 200), Param("phi", float, 0.0),
    Param("nbins", int, 101, lambda x: x >= 8),
], _run_ldos, "local density of states and Lorentzian width")

_register("lyapunov", [
    Param("seed", int),
    Param("map", str, "standard"), Param("K", float, 10.0),
    Param("n_init", int, 1000, _pos_int),
    Param("n_steps", int, 1000, lambda x: x >= 1000),
    Param("transient", int, 100, lambda x: x >= 0),
], _run_lyapunov, "Benettin Lyapunov exponent")

_register("wigner", _COMMON + [
    Param("N", int, 64, _pos_int), Param("K", float, 9.95),
    Param("x0", float, np.pi), Param("p0", float, 0.0), Param("nu", float, 0.0),
], _run_wigner, "discrete Wigner function of an evolved packet")

_register("classical_fidelity", _COMMON + [
    Param("map", str, "top"), Param("K", float, 1.1), Param("dK", float, 1.7e-3),
    Param("sigma", float, np.sqrt(1e-3)), Param("n_points", int, 10000, _pos_int),
    Param("n_patches", int, 8, _pos_int), Param("cell", float, 0.0),
    Param("n_times", int, 24, _pos_int),
], _run_classical_fidelity, "classical fidelity of perturbed map pairs")

_register("spin_toy", [
    Param("seed", int),
    Param("d", int, 64, lambda x: 1 <= x <= 512), Param("coupling", float, 0.3),
    Param("weight_up", float, 0.5, lambda x: 0 <= x <= 1),
    Param("t_max", float, 50.0, _positive), Param("n_times", int, 101, _pos_int),
], _run_spin_toy, "exact spin-1/2 dephasing toy model")

_register("repro", [Param("seed", int)], _run_repro,
          "scaled-down acceptance recipes with pass/fail output")


# ---------------------------------------------------------------------------
# output

def emit(table: ResultTable, fmt: str = "csv") -> str:
    """Render a table; CSV floats use repr (IEEE round-trip exact)."""
    if fmt == "csv":
        buf = io.StringIO()
        for key in sorted(table.provenance):
            buf.write(f"# {key} = {table.provenance[key]!r}\n")
        buf.write(",".join(table.columns) + "\n")
        for row in table.rows:
            buf.write(",".join(repr(x) if isinstance(x, float) else str(x)
                               for x in row) + "\n")
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({
            "provenance": {k: repr(v) if isinstance(v, float) else v
                           for k, v in sorted(table.provenance.items())},
            "columns": table.columns,
            "rows": [[x for x in row] for row in table.rows],
        }, indent=1)
    raise _parse_error(f"unknown output format {fmt!r}")


def read_table(text: str) -> ResultTable:
    """Parse an emitted CSV back into a ResultTable (round-trip exact)."""
    import ast

    provenance = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].partition("=")
        provenance[key.strip()] = ast.literal_eval(val.strip())
        i += 1
    if i >= len(lines):
        raise _parse_error("empty table")
    columns = lines[i].split(",")
    rows = []
    for line in lines[i + 1:]:
        if not line:
            continue
        cells = []
        for cell in line.split(","):
            try:
                cells.append(int(cell))
            except ValueError:
                try:
                    cells.append(float(cell))
                except ValueError:
                    cells.append(cell)
        rows.append(tuple(cells))
    return ResultTable(columns, rows, provenance)


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="echolab",
        description="echo, purity and phase-space experiments on quantum maps",
        epilog="`echolab --experiment NAME ...` is accepted as an alias for "
               "the NAME subcommand.")
    common = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="INI config with an [experiment] section")
    common.add_argument("--seed", type=int, help="RNG seed (mandatory; PCG64 streams)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--jobs", type=int,
                        help="FFT worker threads (default: cores or ECHOLAB_JOBS)")
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded, strictly ordered reductions")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    ap._common = common  # reused by subparsers; SUPPRESS keeps overrides sane
    for a in common._actions:
        ap._add_action(a)
    sub = ap.add_subparsers(dest="subcommand")
    for name, info in EXPERIMENTS.items():
        sub.add_parser(name, parents=[common], help=info["help"])
    return ap


def _jobs_from(args) -> int:
    if getattr(args, "deterministic", False):
        return 1
    if getattr(args, "jobs", None):
        return args.jobs
    env = os.environ.get("ECHOLAB_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise _parse_error(f"ECHOLAB_JOBS = {env!r} is not an integer")
    return os.cpu_count() or 1


def _rewrite_experiment_flag(argv: list) -> list:
    """Turn `--experiment NAME` (or --experiment=NAME) into the subcommand form."""
    out = list(argv)
    for i, tok in enumerate(out):
        if tok == "--experiment":
            if i + 1 >= len(out):
                raise _parse_error("--experiment expects a name")
            name = out[i + 1]
            del out[i:i + 2]
            return [name] + out
        if tok.startswith("--experiment="):
            name = tok.split("=", 1)[1]
            del out[i]
            return [name] + out
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        argv = _rewrite_experiment_flag(argv)
    except ConfigError as e:
        _fail(e)
        return e.exit_code
    args, extra = ap.parse_known_args(argv)
    if extra:
        _fail(_parse_error(f"unrecognized arguments: {' '.join(extra)}"))
        return EXIT_PARSE
    name = args.subcommand
    try:
        overrides = {}
        for item in getattr(args, "set", []):
            key, eq, val = item.partition("=")
            if not eq:
                raise _parse_error(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = val.strip()
        if getattr(args, "seed", None) is not None:
            overrides["seed"] = args.seed
        cfg = parse_config(name, getattr(args, "config", None), overrides)
        cfg.out = getattr(args, "out", None)
        cfg.fmt = getattr(args, "format", None) or "csv"
        cfg.jobs = _jobs_from(args)
        cfg.deterministic = bool(getattr(args, "deterministic", False))
    except ConfigError as e:
        _fail(e)
        return e.exit_code

    start = time.time()
    try:
        with scipy.fft.set_workers(cfg.jobs):
            table = EXPERIMENTS[cfg.experiment]["runner"](cfg)
    except ConfigError as e:
        _fail(e)
        return e.exit_code
    except (ValueError, qstate.BasisMismatchError) as e:
        _fail(ConfigError("E_RUNTIME", EXIT_RUNTIME, str(e)))
        return EXIT_RUNTIME
    table.provenance.update({f"config.{k}": v for k, v in cfg.effective().items()})
    table.provenance["echolab_version"] = __version__
    table.provenance["walltime_s"] = round(time.time() - start, 3)

    text = emit(table, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _fail(err: ConfigError):
    sys.stderr.write(json.dumps({"error": err.code, "message": str(err)}) + "\n")


if __name__ == "__main__":
    raise SystemExit(main())
