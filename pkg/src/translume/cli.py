"""``translume`` command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, with_overrides
from .emission import (
    alias_signature,
    fit_temperature,
    stimulated_fractions,
    thermal_fit,
    vacuum_spectrum,
)
from .errors import ConfigError, DomainError, InsufficientPeaks, NotTransluminal, NumericalError
from .grating import find_horizons, trace_ray
from .pulse import PulseModel, hawking_temperature, intensity_sum, pair_mode_sum, spectral_amplitude

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
VERSION_LINE = f"# translume {__version__}"
COMMANDS = ("rays", "spectrum", "vacuum", "stimulated", "sweep")


class UsageError(ConfigError):
    pass


# ---------------------------------------------------------------------------
# writers


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_table(path: Path, columns: list[str], rows, fmt: str) -> Path:
    """CSV (version line, header, %.17g floats) or JSON ``{version, columns, rows}``."""
    rows = [list(r) for r in rows]
    if fmt == "json":
        path = path.with_suffix(".json")
        body = {
            "version": __version__,
            "columns": columns,
            "rows": [[_json_value(v) for v in r] for r in rows],
        }
        path.write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")
        return path
    path = path.with_suffix(".csv")
    lines = [VERSION_LINE, ",".join(columns)]
    lines += [",".join(_cell(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path: Path, payload: dict) -> Path:
    payload = {"version": __version__, **{k: _json_value(v) for k, v in payload.items()}}
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_rays(cfg: RunConfig, out: Path, fmt: str, **_) -> int:
    grating, block = cfg.grating, cfg.rays
    if grating.transluminal:
        horizons = [(h.X, h.kind.value, h.dcdX) for h in find_horizons(grating)]
    elif block.relative_to_horizons:
        find_horizons(grating)  # raises NotTransluminal
        horizons = []
    else:
        horizons = []
    if block.relative_to_horizons:
        span = block.x_max - block.x_min
        starts = [h[0] + block.x_min + span * (i + 0.5) / block.count
                  for h in horizons for i in range(block.count)]
    else:
        starts = list(np.linspace(block.x_min, block.x_max, block.count))
    for i, x0 in enumerate(starts):
        ray = trace_ray(grating, float(x0), block.t0, block.t_end)
        write_table(out / f"ray_{i:03d}", ["t", "x", "X"], zip(ray.t, ray.x, ray.X), fmt)
    write_table(out / "horizons", ["X", "kind", "dcdX"], horizons, fmt)
    print(f"rays={len(starts)} horizons={len(horizons)}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Path, fmt: str, **_) -> int:
    model = PulseModel(cfg.grating)
    s = cfg.spectrum
    rows = []
    for m in range(s.n_prime_max, s.n_prime_min - 1, -1):
        F = spectral_amplitude(model, s.k_tilde, s.n, m)
        rows.append((m, F.real, F.imag, abs(F) ** 2))
    write_table(out / "spectrum", ["n_prime", "reF", "imF", "absF2"], rows, fmt)
    T = hawking_temperature(cfg.grating)
    write_json(out / "spectrum_meta.json", {
        "gamma": model.gamma,
        "long_grating": model.long_grating,
        "T_H": T.value,
        "T_H_omega_form": T.omega_form,
        "T_H_forms_differ": T.forms_differ,
        "k_tilde": s.k_tilde,
        "n": s.n,
    })
    print(f"rows={len(rows)} gamma={_cell(model.gamma)} T_H={_cell(T.value)}")
    return EXIT_OK


def cmd_vacuum(cfg: RunConfig, out: Path, fmt: str, workers: int = 1, **_) -> int:
    v = cfg.vacuum
    lengths = v.d_values or (cfg.grating.d,)
    summary = []
    for i, d in enumerate(lengths):
        grating = cfg.grating.replace(d=float(d))
        spec = vacuum_spectrum(grating, grid=v.grid, periods=v.periods,
                               points=v.points or None, workers=workers)
        write_table(out / f"vacuum_{i:02d}", ["omega", "density"], zip(spec.omega, spec.density), fmt)
        try:
            if v.fit == "tail":
                fit = fit_temperature(grating, workers=workers).fit
            else:
                fit = thermal_fit(spec)
            T_fit, resid = fit.T, fit.residual
        except InsufficientPeaks:
            T_fit = resid = math.nan
        T_H = hawking_temperature(grating).value
        summary.append((i, float(d), T_fit, T_H, resid, spec.energy_per_period))
        print(f"d={_cell(float(d))} T_fit={_cell(T_fit)} T_H={_cell(T_H)}")
    write_table(out / "vacuum_summary",
                ["index", "d", "T_fit", "T_H", "residual", "energy_per_period"], summary, fmt)
    return EXIT_OK


def cmd_stimulated(cfg: RunConfig, out: Path, fmt: str, engine: str = "analytic", **_) -> int:
    s = cfg.stimulated
    res = stimulated_fractions(cfg.grating, s.k_tilde, s.n, engine=engine)
    write_table(out / "stimulated", ["n_prime", "fraction"], zip(res.n_prime, res.fraction), fmt)
    probe = s.probe or cfg.grating.c0 * (s.k_tilde + s.n * cfg.grating.g) / cfg.grating.eps_b
    alias = alias_signature(probe, cfg.grating.Omega)
    print(f"total_negative_fraction={_cell(res.total)}")
    print(f"engine={engine}")
    print(f"probe={_cell(probe)}")
    print(f"positive_alias={_cell(alias.positive_alias)}")
    print(f"negative_alias={_cell(alias.negative_alias)}")
    print(f"degenerate_alias={_cell(alias.degenerate)}")
    return EXIT_OK


def _sweep_point(args):
    cfg, point, engine = args
    run = with_overrides(cfg, point)
    target = cfg.sweep.target
    if target == "stimulated":
        s = run.stimulated
        return stimulated_fractions(run.grating, s.k_tilde, s.n, engine=engine).total
    if target == "intensity":
        return intensity_sum(PulseModel(run.grating), run.stimulated.k_tilde, run.stimulated.n, "numeric")
    if target == "pairs":
        return pair_mode_sum(PulseModel(run.grating), run.stimulated.k_tilde, run.stimulated.n)
    return hawking_temperature(run.grating).value


def cmd_sweep(cfg: RunConfig, out: Path, fmt: str, engine: str = "analytic", workers: int = 1, **_) -> int:
    params = cfg.sweep.parameters
    if not params:
        raise UsageError("sweep needs at least one parameter list in [sweep], e.g. 'd = 20, 40'")
    names = [k for k, _ in params]
    points = [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in params))]
    for p in points:  # validate every point before spending compute
        with_overrides(cfg, p)
    tasks = [(cfg, p, engine) for p in points]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_sweep_point, tasks))
    else:
        values = [_sweep_point(t) for t in tasks]
    rows = [[p[k] for k in names] + [v] for p, v in zip(points, values)]
    write_table(out / "sweep", names + [cfg.sweep.target], rows, fmt)
    for row in rows:
        print(" ".join(f"{k}={_cell(x)}" for k, x in zip(names + [cfg.sweep.target], row)))
    return EXIT_OK


HANDLERS = {
    "rays": cmd_rays,
    "spectrum": cmd_spectrum,
    "vacuum": cmd_vacuum,
    "stimulated": cmd_stimulated,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="translume", description="Transluminal grating transmission and emission.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (overrides [output] format)")
    p.add_argument("--engine", choices=("analytic", "floquet"), default="analytic")
    p.add_argument("--workers", type=int, help="worker processes (default: TRANSLUME_WORKERS or 1)")
    p.add_argument("--version", action="version", version=f"translume {__version__}")
    return p


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        n = flag
    else:
        env = os.environ.get("TRANSLUME_WORKERS", "").strip()
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"TRANSLUME_WORKERS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(f"worker count must be >= 1, got {n}")
    return n


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        workers = resolve_workers(args.workers)
        out = Path(args.out or cfg.output.dir)
        fmt = args.format or cfg.output.format
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg, out, fmt, engine=args.engine, workers=workers)
    except UsageError as exc:
        print(f"translume: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, NotTransluminal, DomainError) as exc:
        print(f"translume: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"translume: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
