"""Command-line front end: configuration, orchestration and CSV/JSON output.

Subcommands
-----------
simulate       Monte Carlo rate statistics.
analytic       Numerical evaluation of the analytical expressions.
compare        Join a simulation CSV with an analytic CSV and report deviations.
spatial-stats  K-function and second-moment diagnostics of the interferer field.

Settings come from defaults, then a YAML config (``--config``), then flags.
"""

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analytic import (
    avg_achievable_rate_rsma,
    fit_beta_meta,
    meta_scale,
    moment_crr_noma,
    moment_crr_oma,
    moment_crr_rsma,
)
from .exceptions import ConfigError, InfeasibleMomentsError, InvalidParameterError
from .mcs import PRESETS, preset, scheme_from_mapping
from .montecarlo import (
    ExperimentSpec,
    SWEEP_PARAMETERS,
    default_xi_grid,
    format_float,
    run_experiment,
    write_ccdf_csv,
    write_metadata_json,
    write_statistics_csv,
)
from .sinr import SystemConfig
from .spatial import (
    Window,
    default_r_grid,
    estimate_k_function,
    estimate_second_moment_measure,
    k_function,
    model_second_moment,
    sample_interferers_model_a,
    sample_interferers_model_b,
    sample_network,
)

__all__ = ["main", "build_parser", "load_config", "spec_from_mapping", "RunManifest", "config_hash"]

OUT_ENV = "UPLINK_RSMA_OUT"

_SYSTEM_FIELDS = {"lambda_bs", "N", "eta", "sigma2_norm", "sigma2_db", "beta", "q"}
_SIM_FIELDS = {"topologies", "fading", "seed", "side_length", "wraparound", "colocated",
               "common_random_numbers"}
_TOP_FIELDS = {"access", "preset", "scheme", "rates", "system", "simulation", "sweep", "xi_grid"}


def _number(value, path, cast=float):
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a number, got {value!r}")
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {value!r}") from None


def _mapping(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(path, "expected a mapping")
    return value


def _check_keys(data, allowed, path):
    unknown = sorted(set(data) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(where, "unknown field")


def spec_from_mapping(data):
    """Validate a configuration mapping and build an :class:`ExperimentSpec`."""
    data = _mapping(data, "config")
    _check_keys(data, _TOP_FIELDS, "")

    if "scheme" in data and "preset" in data:
        raise ConfigError("scheme", "give either preset or scheme, not both")
    if "scheme" in data:
        scheme = scheme_from_mapping(data["scheme"], "scheme")
    else:
        name = str(data.get("preset", "S1"))
        if name.upper() not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        scheme = preset(name)
    if "rates" in data:
        rates = data["rates"]
        if not isinstance(rates, list) or not rates:
            raise ConfigError("rates", "expected a non-empty list")
        if len(rates) != scheme.M:
            raise ConfigError("rates", f"expected {scheme.M} rates, got {len(rates)}")
        try:
            scheme = scheme.with_rates([_number(r, "rates") for r in rates])
        except InvalidParameterError as exc:
            raise ConfigError("rates", str(exc)) from None

    system = _mapping(data.get("system"), "system")
    _check_keys(system, _SYSTEM_FIELDS, "system")
    kwargs = {}
    for key in ("lambda_bs", "eta", "sigma2_norm", "beta", "q"):
        if key in system:
            kwargs[key] = _number(system[key], f"system.{key}")
    if "N" in system:
        kwargs["N"] = _number(system["N"], "system.N", int)
    if "sigma2_db" in system:
        if "sigma2_norm" in system:
            raise ConfigError("system.sigma2_db", "give either sigma2_db or sigma2_norm")
        kwargs["sigma2_norm"] = 10.0 ** (_number(system["sigma2_db"], "system.sigma2_db") / 10.0)
    for key, value in kwargs.items():
        try:
            SystemConfig(**{key: value})
        except InvalidParameterError as exc:
            raise ConfigError(f"system.{key}", str(exc)) from None
    cfg = SystemConfig(**kwargs)

    sim = _mapping(data.get("simulation"), "simulation")
    _check_keys(sim, _SIM_FIELDS, "simulation")
    access = str(data.get("access", "rsma")).lower()
    if access not in ("rsma", "noma", "oma"):
        raise ConfigError("access", f"expected rsma, noma or oma, got {access!r}")
    if access == "oma" and cfg.N != 1:
        raise ConfigError("system.N", "OMA requires N = 1")

    sweep = []
    for name, values in _mapping(data.get("sweep"), "sweep").items():
        if name not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.{name}", f"expected one of {SWEEP_PARAMETERS}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{name}", "expected a non-empty list")
        if name == "thresholds":
            for i, thr in enumerate(values):
                scheme_from_mapping({"thresholds_db": thr, "rates": list(scheme.rates[1:])},
                                    f"sweep.thresholds[{i}]")
        else:
            for i, v in enumerate(values):
                value = _number(v, f"sweep.{name}[{i}]")
                try:
                    cfg.replace(**{name: value})
                except InvalidParameterError as exc:
                    raise ConfigError(f"sweep.{name}[{i}]", str(exc)) from None
        sweep.append((name, values))

    xi_grid = data.get("xi_grid")
    if xi_grid is not None and not isinstance(xi_grid, list):
        raise ConfigError("xi_grid", "expected a list")

    try:
        return ExperimentSpec(
            cfg=cfg,
            scheme=scheme,
            access=access,
            n_topologies=_number(sim.get("topologies", 1000), "simulation.topologies", int),
            n_fading=_number(sim.get("fading", 5000), "simulation.fading", int),
            master_seed=_number(sim.get("seed", 0), "simulation.seed", int),
            sweep=tuple(sweep),
            window=Window(_number(sim.get("side_length", 1000.0), "simulation.side_length"),
                          bool(sim.get("wraparound", True))),
            colocated=bool(sim.get("colocated", False)),
            common_random_numbers=bool(sim.get("common_random_numbers", True)),
            xi_grid=None if xi_grid is None else tuple(_number(x, "xi_grid") for x in xi_grid),
        )
    except ConfigError:
        raise
    except InvalidParameterError as exc:
        raise ConfigError("simulation", str(exc)) from None


def load_config(path):
    """Read a YAML configuration file into a validated :class:`ExperimentSpec`."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "file not found")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"cannot parse: {exc}") from None
    return spec_from_mapping(data)


def _read_mapping(path):
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "file not found")
    try:
        return _mapping(yaml.safe_load(path.read_text()), str(path))
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"cannot parse: {exc}") from None


def _parse_grid(text):
    """``"0:1:11"`` (start:stop:count) or ``"0,0.5,1"``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("--beta-grid", "expected start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(round(v, 12)) for v in np.linspace(start, stop, count)]
    return [float(v) for v in text.split(",") if v.strip()]


def merged_config(args):
    """Config mapping after applying flags over the file (flag > file > default)."""
    data = dict(_read_mapping(getattr(args, "config", None)))
    system = dict(_mapping(data.get("system"), "system"))
    sim = dict(_mapping(data.get("simulation"), "simulation"))
    if args.preset is not None:
        data.pop("scheme", None)
        data["preset"] = args.preset
    if args.access is not None:
        data["access"] = args.access
    for flag, key in (("q", "q"), ("eta", "eta"), ("lambda_bs", "lambda_bs"), ("beta", "beta"),
                      ("n_users", "N")):
        value = getattr(args, flag)
        if value is not None:
            system[key] = value
    if args.sigma2_db is not None:
        system.pop("sigma2_norm", None)
        system["sigma2_db"] = args.sigma2_db
    for flag, key in (("topologies", "topologies"), ("fading", "fading"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            sim[key] = value
    if args.beta_grid is not None:
        data["sweep"] = {"beta": _parse_grid(args.beta_grid)}
    if system:
        data["system"] = system
    if sim:
        data["simulation"] = sim
    return data


def config_hash(data):
    """sha256 of the canonical JSON form; independent of key order."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunManifest:
    """Provenance record written next to every output."""

    command: str
    config: dict
    spec: dict
    presets: list
    master_seed: int
    version: str = __version__
    phases: dict = field(default_factory=dict)

    @property
    def config_hash(self):
        return config_hash(self.config)

    def to_dict(self):
        return {
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "spec": self.spec,
            "presets": self.presets,
            "master_seed": self.master_seed,
            "version": self.version,
            "wall_time_s": self.phases,
        }

    def write(self, out_dir):
        path = Path(out_dir) / "manifest.json"
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str) + "\n")
        return path


def _out_dir(args):
    out = args.out or os.environ.get(OUT_ENV) or "results"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_text(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _manifest(command, data, spec):
    return RunManifest(command, data, spec.to_dict(), [spec.scheme.name] if spec.scheme.name else [],
                       int(spec.master_seed))


def cmd_simulate(args):
    data = merged_config(args)
    spec = spec_from_mapping(data)
    out = _out_dir(args)
    manifest = _manifest("simulate", data, spec)
    start = time.perf_counter()
    results = run_experiment(spec, workers=args.workers)
    manifest.phases["simulate"] = time.perf_counter() - start
    write_statistics_csv(out / "statistics.csv", results)
    write_ccdf_csv(out / "ccdf.csv", results)
    write_metadata_json(out / "metadata.json", spec, results)
    manifest.write(out)
    print(f"wrote {out / 'statistics.csv'}")
    return 0


def analytic_rows(spec, with_achievable=True):
    """Analytic mean, M2, variance (and Shannon bound for RSMA) per sweep point and rank."""
    rows = []
    for name, value, cfg, scheme in spec.points():
        ranks = [1] if spec.access == "oma" else range(1, cfg.N + 1)
        for n in ranks:
            if spec.access == "rsma":
                m1, m2 = (moment_crr_rsma(b, cfg, scheme, n) for b in (1, 2))
                shannon = avg_achievable_rate_rsma(cfg, n) if with_achievable else math.nan
            elif spec.access == "noma":
                m1, m2 = (moment_crr_noma(b, cfg, scheme, n) for b in (1, 2))
                shannon = math.nan
            else:
                m1, m2 = (moment_crr_oma(b, cfg, scheme) for b in (1, 2))
                shannon = math.nan
            rows.append({"sweep_param": name, "sweep_value": value, "rank": n, "mean": m1,
                         "m2": m2, "var": max(m2 - m1 * m1, 0.0), "achievable": shannon,
                         "scheme": scheme})
    return rows


def _sweep_text(value):
    if isinstance(value, (tuple, list)):
        return ";".join(format_float(v) for v in value)
    return value if isinstance(value, str) else format_float(value)


def cmd_analytic(args):
    data = merged_config(args)
    spec = spec_from_mapping(data)
    out = _out_dir(args)
    manifest = _manifest("analytic", data, spec)
    start = time.perf_counter()
    rows = analytic_rows(spec, with_achievable=not args.no_achievable)
    manifest.phases["analytic"] = time.perf_counter() - start
    lines = ["sweep_param,sweep_value,rank,mean,m2,var,achievable,source"]
    ccdf = ["sweep_param,sweep_value,xi,rank,ccdf,clamped"]
    for row in rows:
        lines.append(",".join([row["sweep_param"], _sweep_text(row["sweep_value"]), str(row["rank"])]
                              + [format_float(row[k]) for k in ("mean", "m2", "var", "achievable")]
                              + ["analytic"]))
        scheme = row["scheme"]
        xi = default_xi_grid(scheme) if spec.xi_grid is None else np.asarray(spec.xi_grid)
        try:
            meta = fit_beta_meta(row["mean"], row["m2"], meta_scale(spec.access, scheme), clamp=True)
        except InfeasibleMomentsError:
            continue
        for x, p in zip(xi, meta.ccdf(xi)):
            ccdf.append(f"{row['sweep_param']},{_sweep_text(row['sweep_value'])},{format_float(x)},"
                        f"{row['rank']},{format_float(p)},{int(meta.clamped)}")
    _write_text(out / "analytic.csv", "\n".join(lines) + "\n")
    _write_text(out / "analytic_ccdf.csv", "\n".join(ccdf) + "\n")
    manifest.write(out)
    print(f"wrote {out / 'analytic.csv'}")
    return 0


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "file not found")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for key in ("sweep_param", "sweep_value", "rank", "mean"):
        if rows and key not in rows[0]:
            raise ConfigError(str(path), f"missing column {key}")
    return rows


def compare_rows(sim_rows, analytic_rows_):
    """Join on (sweep_param, sweep_value, rank); relative deviation of the simulated mean."""
    def key(row):
        value = row["sweep_value"]
        try:
            value = format_float(float(value))
        except ValueError:
            pass
        return row["sweep_param"], value, int(row["rank"])

    table = {key(r): r for r in analytic_rows_}
    joined = []
    for row in sim_rows:
        ref = table.get(key(row))
        if ref is None:
            continue
        a, s = float(ref["mean"]), float(row["mean"])
        joined.append((key(row), s, a, abs(s - a) / abs(a) if a else math.inf))
    return joined


def cmd_compare(args):
    joined = compare_rows(_read_rows(args.simulation), _read_rows(args.analytic))
    if not joined:
        raise InvalidParameterError("no common (sweep_param, sweep_value, rank) rows")
    out = _out_dir(args)
    lines = ["sweep_param,sweep_value,rank,simulation,analytic,rel_dev"]
    report = {}
    for (param, value, rank), s, a, dev in joined:
        lines.append(f"{param},{value},{rank},{format_float(s)},{format_float(a)},{format_float(dev)}")
        report.setdefault(rank, []).append(dev)
    summary = {str(rank): {"max_rel_dev": max(d), "mean_rel_dev": float(np.mean(d)), "points": len(d)}
               for rank, d in sorted(report.items())}
    _write_text(out / "comparison.csv", "\n".join(lines) + "\n")
    _write_text(out / "comparison.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for rank, s in summary.items():
        print(f"rank {rank}: max rel. deviation {100 * s['max_rel_dev']:.2f}%, "
              f"mean {100 * s['mean_rel_dev']:.2f}% over {s['points']} points")
    return 0


def cmd_spatial_stats(args):
    lam = args.lambda_bs if args.lambda_bs is not None else 1e-4
    out = _out_dir(args)
    window = Window(args.side_length)
    r_grid = default_r_grid(lam)
    seed = args.seed if args.seed is not None else 0
    start = time.perf_counter()
    for N in args.n_values:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(N,)))
        realizations = []
        for _ in range(args.realizations):
            net = sample_network(lam, N, window, rng)
            realizations.append(net.interferer_points)
        k_emp = estimate_k_function(realizations, N, lam, r_grid)
        lines = ["r,k_empirical,k_model"]
        lines += [f"{format_float(r)},{format_float(e)},{format_float(m)}"
                  for r, e, m in zip(r_grid, k_emp, k_function(r_grid, lam))]
        _write_text(out / f"k_function_N{N}.csv", "\n".join(lines) + "\n")

        rng_a = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(N, 1)))
        model_window = Window(args.side_length)
        a_pts = [sample_interferers_model_a(lam, N, model_window, rng_a) for _ in range(args.realizations)]
        b_pts = [sample_interferers_model_b(lam, N, model_window, rng_a) for _ in range(args.realizations)]
        ma = estimate_second_moment_measure(a_pts, r_grid)
        mb = estimate_second_moment_measure(b_pts, r_grid)
        lines = ["r,model_a_empirical,model_a_theory,model_b_empirical,model_b_theory"]
        lines += [",".join(format_float(v) for v in row) for row in zip(
            r_grid, ma, model_second_moment(r_grid, lam, N, "A"), mb,
            model_second_moment(r_grid, lam, N, "B"))]
        _write_text(out / f"second_moment_N{N}.csv", "\n".join(lines) + "\n")
    data = {"command": "spatial-stats", "lambda_bs": lam, "n_values": list(args.n_values),
            "realizations": args.realizations, "seed": seed, "side_length": args.side_length}
    manifest = RunManifest("spatial-stats", data, data, [], seed,
                           phases={"spatial-stats": time.perf_counter() - start})
    manifest.write(out)
    print(f"wrote K-function and second-moment CSVs to {out}")
    return 0


def _add_common(p):
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--preset", help="MCS preset S1-S4")
    p.add_argument("--access", choices=["rsma", "noma", "oma"])
    p.add_argument("--beta", type=float, help="power split")
    p.add_argument("--beta-grid", help="power-split sweep, start:stop:count or comma list")
    p.add_argument("--q", type=float, help="decoding-order probability")
    p.add_argument("--eta", type=float, help="path-loss exponent")
    p.add_argument("--lambda-bs", type=float, help="BS intensity per m^2")
    p.add_argument("--n-users", type=int, help="UEs per cell (N)")
    p.add_argument("--sigma2-db", type=float, help="normalized noise power in dB")
    p.add_argument("--topologies", type=int, help="number of topologies")
    p.add_argument("--fading", type=int, help="fading draws per topology")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")


def build_parser():
    parser = argparse.ArgumentParser(prog="uplink-rsma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo rate statistics")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analytic", help="analytical rate expressions")
    _add_common(p)
    p.add_argument("--no-achievable", action="store_true", help="skip the Shannon bound")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("compare", help="join simulation and analytic CSVs")
    p.add_argument("simulation", help="statistics.csv from simulate")
    p.add_argument("analytic", help="analytic.csv from analytic")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("spatial-stats", help="K-function and second-moment diagnostics")
    p.add_argument("--n-values", type=int, nargs="+", default=[2, 5])
    p.add_argument("--realizations", type=int, default=500)
    p.add_argument("--lambda-bs", type=float)
    p.add_argument("--side-length", type=float, default=1000.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_spatial_stats)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # reported as machine-readable JSON
        error = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ConfigError):
            error["field"] = exc.field
        print(json.dumps(error), file=sys.stderr)
        return 2 if isinstance(exc, (ConfigError, InvalidParameterError)) else 1


if __name__ == "__main__":
    sys.exit(main())
