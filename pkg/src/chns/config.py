"""Run configuration (INI format) and run manifests.

The configuration is diff-friendly INI with ``key = value`` lines; parsing is
stdlib-only.  Semantic errors name the offending section, key and line.  The
manifest written at run end embeds the exact config text, the code version and
the checkpoint index, and is sufficient to bit-reproduce the run.
"""

from __future__ import annotations

import configparser
import json
import os
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .integrator import SchemeConfig, default_stabilization
from .spectral import GridSpec, PhysicsParams


class ConfigError(ValueError):
    """Invalid run configuration; the message names the field and line."""


@dataclass(frozen=True)
class NoiseConfig:
    k_modes: int = 8
    sigma0: float = 0.2
    sigma_decay: float = 2.0
    c0: float = 1.0
    c1_mult: float = 0.5
    seed: int = 1

    def validate(self) -> None:
        if self.k_modes < 0:
            raise ConfigError("noise.K must be nonnegative")
        for name in ("sigma0", "c0", "c1_mult"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"noise.{name} must be nonnegative")


@dataclass(frozen=True)
class TimeConfig:
    dt: float = 1e-3
    horizon: float = 1.0
    burn_in: float = 0.0
    checkpoint_every: int = 1000
    observe_every: int = 100

    def validate(self) -> None:
        if self.dt <= 0.0:
            raise ConfigError("time.dt must be positive")
        if self.horizon < 0.0:
            raise ConfigError("time.T must be nonnegative")
        if not 0.0 <= self.burn_in <= max(self.horizon, 0.0):
            raise ConfigError("time.burn_in must lie in [0, T]")
        n = round(self.horizon / self.dt)
        if abs(n * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ConfigError("time.T must be an integer number of steps of time.dt")
        if self.checkpoint_every < 0 or self.observe_every < 1:
            raise ConfigError("time.checkpoint_every must be >= 0 and time.observe_every >= 1")


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "random_smooth"   # zero | random_smooth
    amplitude: float = 0.1
    max_mode: int = 4
    phi_mean: float = 0.0

    def validate(self) -> None:
        if self.kind not in ("zero", "random_smooth"):
            raise ConfigError(f"initial.kind must be zero or random_smooth, got {self.kind!r}")
        if self.amplitude < 0.0 or self.max_mode < 1:
            raise ConfigError("initial.amplitude must be >= 0 and initial.max_mode >= 1")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    physics: PhysicsParams
    noise: NoiseConfig
    time: TimeConfig
    initial: InitialConfig
    output: OutputConfig
    stabilization: float | None = None   # None -> 2 * kappa * c2
    convection: bool = True

    def scheme(self) -> SchemeConfig:
        s = self.stabilization
        if s is None:
            s = default_stabilization(self.physics)
        return SchemeConfig(dt=self.time.dt, stabilization=s, convection=self.convection)


_FLOAT_KEYS = {
    ("domain", "L"),
    ("physics", "nu1"), ("physics", "nu2"), ("physics", "kappa"),
    ("physics", "c1"), ("physics", "c2"),
    ("noise", "sigma0"), ("noise", "sigma_decay"), ("noise", "c0"), ("noise", "c1_mult"),
    ("time", "dt"), ("time", "T"), ("time", "burn_in"),
    ("initial", "amplitude"), ("initial", "phi_mean"),
    ("scheme", "stabilization"),
}
_INT_KEYS = {
    ("domain", "N"), ("domain", "dealias_pad"),
    ("noise", "K"), ("noise", "seed"),
    ("time", "checkpoint_every"), ("time", "observe_every"),
    ("initial", "max_mode"),
}
_BOOL_KEYS = {("scheme", "convection")}
_STR_KEYS = {("initial", "kind"), ("output", "directory"), ("output", "formats")}
_KNOWN = _FLOAT_KEYS | _INT_KEYS | _BOOL_KEYS | _STR_KEYS


def _key_line(text: str, section: str, key: str) -> int | None:
    """Line number of ``key`` inside ``section`` (best effort, for messages)."""
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip().lower()
        elif current == section.lower() and "=" in stripped:
            if stripped.split("=", 1)[0].strip().lower() == key.lower():
                return i
    return None


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, text: str, path: str):
        self.parser = parser
        self.text = text
        self.path = path

    def fail(self, section: str, key: str, message: str) -> ConfigError:
        line = _key_line(self.text, section, key)
        where = f"{self.path}:{line}" if line else self.path
        return ConfigError(f"{where}: [{section}] {key}: {message}")

    def get(self, section: str, key: str, kind: str, default):
        if not self.parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"{self.path}: missing required key [{section}] {key}")
            return default
        raw = self.parser.get(section, key).strip()
        try:
            if kind == "float":
                return float(raw)
            if kind == "int":
                return int(raw)
            if kind == "bool":
                if raw.lower() in ("true", "yes", "on", "1"):
                    return True
                if raw.lower() in ("false", "no", "off", "0"):
                    return False
                raise ValueError(raw)
            return raw
        except ValueError as err:
            raise self.fail(section, key, f"cannot parse {raw!r} as {kind}") from err


def parse_config_text(text: str, path: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=path)
    except configparser.Error as err:
        raise ConfigError(str(err)) from err

    r = _Reader(parser, text, path)
    for section in parser.sections():
        for key in parser.options(section):
            if (section, key) not in _KNOWN:
                raise r.fail(section, key, "unknown key")

    n = r.get("domain", "N", "int", 64)
    length = r.get("domain", "L", "float", 2.0 * np.pi)
    pad = r.get("domain", "dealias_pad", "int", 2)
    try:
        grid = GridSpec(n=n, length=length, dealias_pad=pad)
    except ValueError as err:
        raise r.fail("domain", "N", str(err)) from err

    phys_kwargs = {}
    for key in ("nu1", "nu2", "kappa", "c1", "c2"):
        value = r.get("physics", key, "float", _PHYSICS_DEFAULTS[key])
        if value <= 0.0 and key != "kappa":
            raise r.fail("physics", key, f"must be positive, got {value}")
        if key == "kappa" and value < 0.0:
            raise r.fail("physics", key, f"must be nonnegative, got {value}")
        phys_kwargs[key] = value
    physics = PhysicsParams(**phys_kwargs)

    noise = NoiseConfig(
        k_modes=r.get("noise", "K", "int", NoiseConfig.k_modes),
        sigma0=r.get("noise", "sigma0", "float", NoiseConfig.sigma0),
        sigma_decay=r.get("noise", "sigma_decay", "float", NoiseConfig.sigma_decay),
        c0=r.get("noise", "c0", "float", NoiseConfig.c0),
        c1_mult=r.get("noise", "c1_mult", "float", NoiseConfig.c1_mult),
        seed=r.get("noise", "seed", "int", NoiseConfig.seed),
    )
    time_cfg = TimeConfig(
        dt=r.get("time", "dt", "float", TimeConfig.dt),
        horizon=r.get("time", "T", "float", TimeConfig.horizon),
        burn_in=r.get("time", "burn_in", "float", TimeConfig.burn_in),
        checkpoint_every=r.get("time", "checkpoint_every", "int", TimeConfig.checkpoint_every),
        observe_every=r.get("time", "observe_every", "int", TimeConfig.observe_every),
    )
    initial = InitialConfig(
        kind=r.get("initial", "kind", "str", InitialConfig.kind),
        amplitude=r.get("initial", "amplitude", "float", InitialConfig.amplitude),
        max_mode=r.get("initial", "max_mode", "int", InitialConfig.max_mode),
        phi_mean=r.get("initial", "phi_mean", "float", InitialConfig.phi_mean),
    )
    output = OutputConfig(
        directory=r.get("output", "directory", "str", OutputConfig.directory),
        formats=r.get("output", "formats", "str", OutputConfig.formats),
    )
    stabilization = None
    if parser.has_option("scheme", "stabilization"):
        stabilization = r.get("scheme", "stabilization", "float", None)
        if stabilization < 0.0:
            raise r.fail("scheme", "stabilization", "must be nonnegative")
    convection = r.get("scheme", "convection", "bool", True)

    for section, cfg in (("noise", noise), ("time", time_cfg), ("initial", initial)):
        try:
            cfg.validate()
        except ConfigError as err:
            message = str(err)
            key = message.split(" ", 1)[0].split(".", 1)[1] if "." in message.split(" ", 1)[0] else ""
            if key:
                raise r.fail(section, key, message) from None
            raise

    return RunConfig(
        grid=grid,
        physics=physics,
        noise=noise,
        time=time_cfg,
        initial=initial,
        output=output,
        stabilization=stabilization,
        convection=convection,
    )


_PHYSICS_DEFAULTS = {"nu1": 1.0, "nu2": 1.0, "kappa": 1.0, "c1": 1.0, "c2": 1.0}


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return parse_config_text(text, str(path))


def serialize_config(cfg: RunConfig) -> str:
    """Canonical INI text; parse(serialize(cfg)) == cfg."""
    g, p, nz, t, i, o = cfg.grid, cfg.physics, cfg.noise, cfg.time, cfg.initial, cfg.output
    lines = [
        "[domain]",
        f"N = {g.n}",
        f"L = {g.length!r}",
        f"dealias_pad = {g.dealias_pad}",
        "",
        "[physics]",
        f"nu1 = {p.nu1!r}",
        f"nu2 = {p.nu2!r}",
        f"kappa = {p.kappa!r}",
        f"c1 = {p.c1!r}",
        f"c2 = {p.c2!r}",
        "",
        "[noise]",
        f"K = {nz.k_modes}",
        f"sigma0 = {nz.sigma0!r}",
        f"sigma_decay = {nz.sigma_decay!r}",
        f"c0 = {nz.c0!r}",
        f"c1_mult = {nz.c1_mult!r}",
        f"seed = {nz.seed}",
        "",
        "[time]",
        f"dt = {t.dt!r}",
        f"T = {t.horizon!r}",
        f"burn_in = {t.burn_in!r}",
        f"checkpoint_every = {t.checkpoint_every}",
        f"observe_every = {t.observe_every}",
        "",
        "[initial]",
        f"kind = {i.kind}",
        f"amplitude = {i.amplitude!r}",
        f"max_mode = {i.max_mode}",
        f"phi_mean = {i.phi_mean!r}",
        "",
        "[scheme]",
        f"convection = {str(cfg.convection).lower()}",
    ]
    if cfg.stabilization is not None:
        lines.append(f"stabilization = {cfg.stabilization!r}")
    lines += [
        "",
        "[output]",
        f"directory = {o.directory}",
        f"formats = {o.formats}",
        "",
    ]
    return "\n".join(lines)


@dataclass
class RunManifest:
    """Everything needed to bit-reproduce a run, written atomically at run end."""

    config_text: str
    code_version: str = __version__
    command: str = "run"
    members: int = 1
    start_time: float = 0.0
    end_time: float = 0.0
    status: str = "ok"
    checkpoints: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "config_text": self.config_text,
                "code_version": self.code_version,
                "command": self.command,
                "members": self.members,
                "start_time": self.start_time,
                "end_time": self.end_time,
                "status": self.status,
                "checkpoints": self.checkpoints,
            },
            indent=2,
        )


def write_manifest(path: str | Path, manifest: RunManifest) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(manifest.to_json())
    os.replace(tmp, path)


def load_manifest(path: str | Path) -> RunManifest:
    data = json.loads(Path(path).read_text())
    keys = {f.name for f in fields(RunManifest)}
    return RunManifest(**{k: v for k, v in data.items() if k in keys})


def now() -> float:
    return time.time()
