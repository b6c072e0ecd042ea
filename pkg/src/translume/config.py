"""Run configuration: an INI-style ``key = value`` file with one section per
command, validated at parse time with file/line-precise messages."""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .grating import GratingConfig

SECTIONS = ("grating", "rays", "spectrum", "vacuum", "stimulated", "sweep", "output")
SWEEPABLE = ("eps_b", "alpha", "g", "Omega", "d", "c0", "k_tilde", "n")
SWEEP_TARGETS = ("stimulated", "intensity", "pairs", "hawking")


@dataclass(frozen=True)
class RaysBlock:
    count: int = 8
    x_min: float = 0.0
    x_max: float = 2 * math.pi
    t0: float = 0.0
    t_end: float = 100.0
    relative_to_horizons: bool = False


@dataclass(frozen=True)
class SpectrumBlock:
    k_tilde: float = 0.75
    n: int = 1
    n_prime_min: int = -60
    n_prime_max: int = -1


@dataclass(frozen=True)
class VacuumBlock:
    d_values: tuple[float, ...] = ()
    grid: str = "chebyshev"
    periods: int = 3
    points: int = 0  # 0 selects the grid's default
    fit: str = "all"


@dataclass(frozen=True)
class StimulatedBlock:
    k_tilde: float = 0.75
    n: int = 1
    probe: float = 0.0  # 0 probes the input frequency itself


@dataclass(frozen=True)
class SweepBlock:
    target: str = "stimulated"
    parameters: tuple[tuple[str, tuple[float, ...]], ...] = ()


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "out"
    format: str = "csv"
    deterministic: bool = True


@dataclass(frozen=True)
class RunConfig:
    grating: GratingConfig = field(default_factory=GratingConfig)
    rays: RaysBlock = field(default_factory=RaysBlock)
    spectrum: SpectrumBlock = field(default_factory=SpectrumBlock)
    vacuum: VacuumBlock = field(default_factory=VacuumBlock)
    stimulated: StimulatedBlock = field(default_factory=StimulatedBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    source: str = field(default="<config>", compare=False)

    def to_text(self) -> str:
        return dump_config(self)


# ---------------------------------------------------------------------------
# parsing


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """1-based line of every ``key = value`` entry, keyed by (section, key)."""
    where: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        head = re.match(r"^\[([^\]]+)\]", line)
        if head:
            section = head.group(1).strip()
            where[(section, "")] = lineno
            continue
        kv = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if kv and section is not None:
            where[(section, kv.group(1).strip())] = lineno
    return where


class _Reader:
    def __init__(self, text: str, source: str):
        self.source = source
        self.lines = _line_index(text)
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str  # keys are case sensitive (Omega)
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from None
        self.parser = parser
        for section in parser.sections():
            if section not in SECTIONS:
                self.fail(section, "", f"unknown section [{section}]")

    def fail(self, section: str, key: str, message: str):
        line = self.lines.get((section, key)) or self.lines.get((section, ""))
        at = f"{self.source}:{line}" if line else self.source
        label = f"[{section}] {key}".strip()
        raise ConfigError(f"{at}: {label}: {message}")

    def block(self, section: str, cls, convert=None):
        if not self.parser.has_section(section):
            return cls()
        known = {f.name: f for f in fields(cls)}
        values = {}
        for key, raw in self.parser.items(section):
            if key not in known:
                self.fail(section, key, f"unknown key (expected one of {', '.join(known)})")
            values[key] = self.value(section, key, raw, known[key].type)
        if convert:
            values = convert(values)
        try:
            return cls(**values)
        except ConfigError as exc:
            # point at the first key named in the message that the file actually sets
            named = [k for k in re.findall(r"\w+", str(exc)) if k in known]
            present = [k for k in named if (section, k) in self.lines]
            key = (present or named or [""])[0]
            self.fail(section, key, str(exc))

    def value(self, section: str, key: str, raw: str, kind):
        kind = str(kind)
        try:
            if kind.startswith("tuple"):
                return tuple(_number(v) for v in raw.split(",") if v.strip())
            if kind == "bool":
                low = raw.strip().lower()
                if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                    raise ValueError(f"not a boolean: {raw!r}")
                return low in ("true", "yes", "1", "on")
            if kind == "int":
                v = _number(raw)
                if not float(v).is_integer():
                    raise ValueError(f"not an integer: {raw!r}")
                return int(v)
            if kind == "float":
                v = float(_number(raw))
                if not math.isfinite(v):
                    raise ValueError(f"not finite: {raw!r}")
                return v
            return raw.strip()
        except ValueError as exc:
            self.fail(section, key, str(exc))


_PI = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*(pi|2pi)\s*$")


def _number(text: str):
    """Parse a number; ``k*pi`` and ``k*2pi`` are accepted for convenience."""
    s = text.strip()
    m = _PI.match(s)
    if m:
        k = float(m.group(1)) if m.group(1) not in ("", "+", "-") else float(m.group(1) + "1")
        return k * (2 * math.pi if m.group(2) == "2pi" else math.pi)
    value = float(s)
    return int(value) if re.fullmatch(r"[-+]?\d+", s) else value


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    r = _Reader(text, source)
    grating = r.block("grating", GratingConfig)
    rays = r.block("rays", RaysBlock)
    spectrum = r.block("spectrum", SpectrumBlock)
    vacuum = r.block("vacuum", VacuumBlock)
    stimulated = r.block("stimulated", StimulatedBlock)
    output = r.block("output", OutputBlock)

    if rays.count < 1:
        r.fail("rays", "count", "must be >= 1")
    if not rays.t_end > rays.t0:
        r.fail("rays", "t_end", "must be greater than t0")
    if spectrum.n_prime_min > spectrum.n_prime_max:
        r.fail("spectrum", "n_prime_min", "must not exceed n_prime_max")
    for section, block in (("spectrum", spectrum), ("stimulated", stimulated)):
        if not 0 < block.k_tilde < grating.g:
            r.fail(section, "k_tilde", f"must lie in (0, g={grating.g:g})")
        if block.k_tilde + block.n * grating.g <= 0:
            r.fail(section, "n", "incident frequency k_tilde + n g must be positive")
    if spectrum.k_tilde + spectrum.n_prime_max * grating.g >= 0:
        r.fail("spectrum", "n_prime_max", "exit frequency k_tilde + n' g must be negative")
    if vacuum.grid not in ("chebyshev", "uniform"):
        r.fail("vacuum", "grid", "must be chebyshev or uniform")
    if vacuum.fit not in ("all", "tail"):
        r.fail("vacuum", "fit", "must be all or tail")
    if vacuum.periods < 1 or vacuum.points < 0:
        r.fail("vacuum", "periods", "periods must be >= 1 and points >= 0")
    if any(d < 0 for d in vacuum.d_values):
        r.fail("vacuum", "d_values", "lengths must be >= 0")
    if output.format not in ("csv", "json"):
        r.fail("output", "format", "must be csv or json")
    if stimulated.probe < 0:
        r.fail("stimulated", "probe", "must be >= 0")

    sweep = SweepBlock()
    if r.parser.has_section("sweep"):
        target = "stimulated"
        params = []
        for key, raw in r.parser.items("sweep"):
            if key == "target":
                target = raw.strip()
                if target not in SWEEP_TARGETS:
                    r.fail("sweep", key, f"must be one of {', '.join(SWEEP_TARGETS)}")
                continue
            if key not in SWEEPABLE:
                r.fail("sweep", key, f"not sweepable (expected one of {', '.join(SWEEPABLE)})")
            try:
                values = tuple(float(_number(v)) for v in raw.split(",") if v.strip())
            except ValueError as exc:
                r.fail("sweep", key, str(exc))
            if not values:
                r.fail("sweep", key, "empty value list")
            params.append((key, values))
        sweep = SweepBlock(target, tuple(params))
    return RunConfig(grating, rays, spectrum, vacuum, stimulated, sweep, output, source)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


# ---------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    out = []
    for name in ("grating", "rays", "spectrum", "vacuum", "stimulated", "output"):
        out.append(f"[{name}]")
        for key, value in asdict(getattr(cfg, name)).items():
            out.append(f"{key} = {_fmt(value)}")
        out.append("")
    if cfg.sweep.parameters or cfg.sweep.target != "stimulated":
        out.append("[sweep]")
        out.append(f"target = {cfg.sweep.target}")
        for key, values in cfg.sweep.parameters:
            out.append(f"{key} = {_fmt(tuple(float(v) for v in values))}")
        out.append("")
    return "\n".join(out)


def with_overrides(cfg: RunConfig, point: dict[str, float]) -> RunConfig:
    """Apply one sweep point to the grating and the stimulated/spectrum blocks."""
    g_keys = {k: v for k, v in point.items() if k in {f.name for f in fields(GratingConfig)}}
    grating = cfg.grating.replace(**g_keys) if g_keys else cfg.grating
    extra = {}
    if "k_tilde" in point:
        extra["k_tilde"] = float(point["k_tilde"])
    if "n" in point:
        extra["n"] = int(point["n"])
    return replace(
        cfg,
        grating=grating,
        stimulated=replace(cfg.stimulated, **extra),
        spectrum=replace(cfg.spectrum, **extra),
    )
