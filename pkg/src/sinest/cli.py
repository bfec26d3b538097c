"""Command-line front end: estimate, sweep, doa-sweep, histogram.

Configuration is a flat set of keys assembled from (lowest priority first)
a packaged preset, an optional INI-style ``--config`` file (section headers
are for grouping only) and explicit command-line flags.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import math
import os
import sys
from importlib import resources

import numpy as np

from .cascade import CascadeConfig
from .doa import ArrayScenario, doa_estimate, synthesize_snapshots
from .errors import SinestError
from .harness import (
    ArraySource,
    EstimatorSettings,
    FixedSource,
    Method,
    RandomSource,
    histogram,
    pair_estimates,
    run_method,
    run_sweep,
)
from .signal import Scenario, parse_vector, synthesize, wrapped_error

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SEED_ENV = "SINEST_SEED"

log = logging.getLogger("sinest")


class ConfigError(ValueError):
    pass


def load_presets() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(resources.files("sinest").joinpath("presets.ini").read_text())
    return cp


def preset_names() -> list[str]:
    return load_presets().sections()


def build_config(args) -> dict[str, str]:
    cfg: dict[str, str] = {}
    if args.preset:
        presets = load_presets()
        if not presets.has_section(args.preset):
            raise ConfigError(f"preset: unknown preset {args.preset!r} (known: {', '.join(presets.sections())})")
        cfg.update(presets[args.preset])
    if SEED_ENV in os.environ:
        cfg["seed"] = os.environ[SEED_ENV]
    if args.config:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config: {exc}") from None
        for section in cp.sections():
            cfg.update({k: v for k, v in cp[section].items()})
    for key, value in (args.set or []):
        cfg[key.lower()] = value
    for key in OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = str(value)
    return cfg


OVERRIDES = ("method", "methods", "snr_db", "snr_grid", "trials", "scenarios", "seed", "m", "beta",
             "grid", "jobs", "freq", "amp", "phase", "n", "p", "angles_deg", "m_ant", "k_snap",
             "bins", "range", "component", "source_model", "kind")


# -- typed getters that name the offending field ---------------------------------

def _get(cfg, key, conv, default=None):
    if key not in cfg or cfg[key] == "":
        if default is None:
            raise ConfigError(f"{key}: missing")
        return default
    try:
        return conv(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: invalid value {cfg[key]!r} ({exc})") from None


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _positive_int(v: str) -> int:
    i = int(v)
    if i < 1:
        raise ValueError("must be >= 1")
    return i


def parse_snr_grid(text: str) -> np.ndarray:
    """'6,10,14' or 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = [float(t) for t in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError("expected start:stop:step with step > 0")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    vals = [float(t) for t in text.split(",") if t.strip()]
    if not vals:
        raise ValueError("empty SNR grid")
    return np.array(vals)


def _methods(cfg, key="methods") -> list[Method]:
    names = [t.strip() for t in cfg.get(key, "").split(",") if t.strip()]
    if not names:
        raise ConfigError(f"{key}: at least one method required")
    try:
        return [Method(n) for n in names]
    except ValueError:
        raise ConfigError(f"{key}: unknown method in {names} (known: {[m.value for m in Method]})") from None


def _scenario(cfg) -> Scenario:
    kv = {k: cfg[k] for k in ("n", "freq", "amp", "phase", "snr_db") if k in cfg}
    kv.setdefault("snr_db", "inf")
    if "p" in cfg and "freq" in kv:
        kv["p"] = cfg["p"]
    try:
        return Scenario.from_mapping(kv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _array_scenario(cfg) -> ArrayScenario:
    try:
        return ArrayScenario.from_mapping(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _settings(cfg) -> EstimatorSettings:
    m = _get(cfg, "m", int, default=-1)
    beta = _get(cfg, "beta", float, default=0.72)
    if beta <= 0:
        raise ConfigError(f"beta: must be positive, got {beta}")
    grid = _get(cfg, "grid", _positive_int, default=-1)
    return EstimatorSettings(
        m=None if m < 0 else m,
        beta=beta,
        grid=None if grid < 0 else grid,
        max_rr_iters=_get(cfg, "max_rr_iters", _positive_int, default=5),
        refine_esprit=_get(cfg, "refine_esprit", _bool, default=False),
    )


def _check_p(cfg, p, n):
    if p < 1:
        raise ConfigError(f"p: must be >= 1, got {p}")
    m = _get(cfg, "m", int, default=-1)
    if m >= 0 and not p < m <= n:
        raise ConfigError(f"m: need p < m <= N (p={p}, m={m}, N={n})")


def _source(cfg):
    kind = cfg.get("kind", "series")
    if kind == "series":
        scen = _scenario(cfg)
        _check_p(cfg, scen.p, scen.n)
        return FixedSource(scen, _get(cfg, "random_phase", _bool, default=False))
    if kind == "random":
        p = _get(cfg, "p", int)
        n = _get(cfg, "n", int)
        if p < 1:
            raise ConfigError(f"p: must be >= 1, got {p}")
        if n < 2 * p:
            raise ConfigError(f"n: must be >= 2p, got {n}")
        _check_p(cfg, p, n)
        return RandomSource(p, n, _get(cfg, "scenarios", _positive_int, default=200))
    if kind == "array":
        return ArraySource(_array_scenario(cfg))
    raise ConfigError(f"kind: unknown record kind {kind!r}")


def _trials(cfg) -> int:
    t = _get(cfg, "trials", int, default=1)
    if t < 1:
        raise ConfigError(f"trials: must be >= 1, got {t}")
    return t


def _seed(cfg) -> int:
    s = _get(cfg, "seed", int, default=0)
    if s < 0:
        raise ConfigError(f"seed: must be nonnegative, got {s}")
    return s


def _read_record(path: str) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) == 1:
                vals.append(complex(parts[0].replace("i", "j")))
            else:
                vals.append(complex(float(parts[0]), float(parts[1])))
    if not vals:
        raise ConfigError(f"input: no samples in {path}")
    return np.array(vals)


def _write(path: str | None, text: str):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands -------------------------------------------------------------------

def cmd_estimate(args) -> int:
    cfg = build_config(args)
    method = _get(cfg, "method", Method, default=Method.PROPOSED)
    settings = _settings(cfg)
    seed = _seed(cfg)
    if args.input:
        x = _read_record(args.input)
        p = _get(cfg, "p", _positive_int)
        f_true = None
    else:
        kind = cfg.get("kind", "series")
        if kind != "series":
            raise ConfigError(f"kind: estimate needs a fixed series scenario, got {kind!r}")
        scen = _scenario(cfg)
        _check_p(cfg, scen.p, scen.n)
        x = synthesize(scen, seed)
        p = scen.p
        f_true = scen.frequencies
    try:
        est, branch = run_method(method, x, p, settings)
    except (SinestError, np.linalg.LinAlgError) as exc:
        print(f"error: estimator failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    freqs = est.frequencies
    print("frequencies: " + " ".join(f"{v:.6f}" for v in freqs))
    print(f"cost: {est.cost if est.cost is not None else float('nan'):.6g}")
    print(f"branch: {branch.value if branch else '-'}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "branch", "cost", *(f"f_{i}" for i in range(p)),
                *((f"err_{i}" for i in range(p)) if f_true is not None else ())])
    row = [method.value, branch.value if branch else "", repr(float(est.cost)) if est.cost is not None else "nan",
           *(repr(float(v)) for v in freqs)]
    if f_true is not None:
        perm = pair_estimates(freqs, f_true)
        row += [repr(float(e)) for e in wrapped_error(freqs[perm], f_true)]
    w.writerow(row)
    _write(args.output, buf.getvalue())
    return EXIT_OK


def _progress(snr, point):
    msg = ", ".join(f"mse={st.overall_mse:.3g}" for st in point)
    print(f"snr {snr:g} dB: {msg}", file=sys.stderr)


def _sweep(args, default_kind: str) -> int:
    cfg = build_config(args)
    if default_kind == "array":
        cfg["kind"] = "array"
    elif cfg.get("kind") == "array":
        raise ConfigError("kind: use doa-sweep for array scenarios")
    source = _source(cfg)
    methods = _methods(cfg)
    grid = _get(cfg, "snr_grid", parse_snr_grid)
    trials = _trials(cfg)
    settings = _settings(cfg)
    seed = _seed(cfg)
    jobs = _get(cfg, "jobs", _positive_int, default=1)
    if isinstance(source, ArraySource) and settings.m is None:
        settings = EstimatorSettings(source.scenario.m_ant, settings.beta, settings.grid,
                                     settings.max_rr_iters, settings.refine_esprit)
    try:
        result = run_sweep(source, methods, grid, trials, seed, settings, jobs,
                           keep_trials=bool(args.trials_output),
                           progress=None if args.quiet else _progress)
    except SinestError as exc:
        print(f"error: sweep failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _write(args.output, result.to_csv())
    if args.trials_output:
        _write(args.trials_output, result.trials_csv())
    return EXIT_OK


def cmd_sweep(args) -> int:
    return _sweep(args, "series")


def cmd_doa_sweep(args) -> int:
    return _sweep(args, "array")


def cmd_histogram(args) -> int:
    cfg = build_config(args)
    source = _source(cfg)
    if isinstance(source, ArraySource):
        raise ConfigError("kind: histogram supports time-series scenarios only")
    method = _get(cfg, "method", Method, default=Method.ESPRIT)
    snr = _get(cfg, "snr_db", float)
    trials = _trials(cfg)
    comp = _get(cfg, "component", int, default=2)
    if not 1 <= comp <= source.p:
        raise ConfigError(f"component: must be in 1..{source.p}, got {comp}")
    bins = _get(cfg, "bins", int, default=80)
    if bins < 2:
        raise ConfigError(f"bins: need at least 2, got {bins}")
    lo, hi = _get(cfg, "range", lambda s: tuple(parse_vector(s)), default=(-0.1, 0.1))
    result = run_sweep(source, [method], [snr], trials, _seed(cfg), _settings(cfg), keep_trials=True)
    errors = [s.wrapped_errors[comp - 1] for s in result.trials if not s.failed]
    try:
        h = histogram(errors, bins, (lo, hi))
    except ValueError as exc:
        raise ConfigError(f"range: {exc}") from None
    _write(args.output, h.to_csv())
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--preset", help="packaged preset name")
    p.add_argument("--config", help="INI-style key=value file")
    p.add_argument("--set", nargs=2, action="append", metavar=("KEY", "VALUE"),
                   help="override any config key")
    p.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--output", "-o", help="CSV output path (default stdout)")
    p.add_argument("--m", type=int, help="covariance window / subarray size")
    p.add_argument("--beta", type=float)
    p.add_argument("--grid", type=int, help="ML grid points per dimension")
    p.add_argument("--n", type=int, help="record length")
    p.add_argument("--p", type=int, help="number of components")
    p.add_argument("--freq")
    p.add_argument("--amp")
    p.add_argument("--phase")
    p.add_argument("--kind", choices=("series", "random", "array"))
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("-q", "--quiet", action="store_true")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sinest", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", help="run one estimator on one record")
    _add_common(pe)
    pe.add_argument("--method")
    pe.add_argument("--snr", dest="snr_db", help="SNR in dB ('inf' for noiseless)")
    pe.add_argument("--input", help="record file: one complex sample per line")
    pe.set_defaults(func=cmd_estimate)

    for name, func, helptext in (("sweep", cmd_sweep, "Monte Carlo MSE/bias sweep"),
                                 ("doa-sweep", cmd_doa_sweep, "array (DoA) Monte Carlo sweep")):
        ps = sub.add_parser(name, help=helptext)
        _add_common(ps)
        ps.add_argument("--methods", help="comma-separated methods")
        ps.add_argument("--snr-grid", dest="snr_grid", help="'a,b,c' or 'start:stop:step'")
        ps.add_argument("--trials", type=int, help="noise trials per scenario and SNR")
        ps.add_argument("--scenarios", type=int, help="random scenario draws")
        ps.add_argument("--jobs", type=int, help="worker processes")
        ps.add_argument("--trials-output", help="optional per-trial CSV dump")
        if name == "doa-sweep":
            ps.add_argument("--angles", dest="angles_deg")
            ps.add_argument("--m-ant", dest="m_ant", type=int)
            ps.add_argument("--k-snap", dest="k_snap", type=int)
            ps.add_argument("--source-model", dest="source_model")
        ps.set_defaults(func=func)

    ph = sub.add_parser("histogram", help="histogram of one component's wrapped error")
    _add_common(ph)
    ph.add_argument("--method")
    ph.add_argument("--snr", dest="snr_db")
    ph.add_argument("--trials", type=int)
    ph.add_argument("--component", type=int, help="1-based component in ascending frequency order")
    ph.add_argument("--bins", type=int)
    ph.add_argument("--range", help="lo,hi of the error axis")
    ph.set_defaults(func=cmd_histogram)
    return ap


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SinestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
