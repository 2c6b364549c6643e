"""Run configuration: one INI-style file per run.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments.  Unknown sections or keys are errors, so a typo never
silently falls back to a default.  See the README for every key.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from fractions import Fraction

from .solver.howard import DEFAULT_TOL, LINEAR_SOLVERS, METHODS
from .solver.problem import ConfigError

COMMANDS = ("solve", "ladder", "props", "audit")

SCHEMA = {
    "problem": {"domain", "d", "m", "h", "g", "g_value", "g_scale", "g_file", "K"},
    "net": {"frames", "profiles", "seed"},
    "solver": {"tol", "max_iters", "method", "linear_solver"},
    "ladder": {"n"},
    "props": {"pairs", "cases", "seed"},
    "audit": {"u_file", "min_fraction"},
    "output": {"dir"},
}

REQUIRED = {
    "solve": ("problem.d", "problem.m", "problem.h"),
    "ladder": ("problem.d", "problem.m", "problem.h", "ladder.n"),
    "audit": ("problem.d", "problem.m", "problem.h", "audit.u_file"),
    "props": (),
}


@dataclass
class RunConfig:
    command: str
    domain: str = "disc"
    d: int = 2
    m: int = 2
    h: float = 1 / 32
    g: str = "constant"
    g_value: float = 1.0
    g_scale: float = 1.0
    g_file: str | None = None
    K: float | None = None
    frames: int = 8
    profiles: int = 8
    net_seed: int = 0
    tol: float = DEFAULT_TOL
    max_iters: int = 100
    method: str = "howard"
    linear_solver: str = "direct"
    n_list: list = field(default_factory=list)
    pairs: int = 10_000
    cases: int = 1000
    props_seed: int = 1
    u_file: str | None = None
    min_fraction: float = 0.99
    out_dir: str = "out"
    source: str | None = None


def _number(text, kind, key):
    try:
        if kind is int:
            return int(text)
        return float(Fraction(text.strip())) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}", key) from exc


def _positive(value, key, strict=True):
    if (strict and not value > 0) or value < 0:
        raise ConfigError(f"{key} must be {'positive' if strict else 'nonnegative'}, got {value}", key)
    return value


def load_config(path, command):
    """Parse and validate ``path`` for ``command``; errors are :class:`ConfigError`."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}", "command")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}", "config") from exc

    seen = set()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", f"{section}.{key}")
            seen.add(f"{section}.{key}")
    for key in REQUIRED[command]:
        if key not in seen:
            raise ConfigError(f"missing required field {key}", key)

    def get(section, key):
        return parser[section][key] if parser.has_option(section, key) else None

    cfg = RunConfig(command=command, source=str(path))
    base = os.path.dirname(os.path.abspath(path))

    if (v := get("problem", "domain")) is not None:
        cfg.domain = v
    if (v := get("problem", "d")) is not None:
        cfg.d = _number(v, int, "problem.d")
    if (v := get("problem", "m")) is not None:
        cfg.m = _number(v, int, "problem.m")
    if (v := get("problem", "h")) is not None:
        cfg.h = _positive(_number(v, float, "problem.h"), "problem.h")
    if (v := get("problem", "g")) is not None:
        cfg.g = v
    if (v := get("problem", "g_value")) is not None:
        cfg.g_value = _number(v, float, "problem.g_value")
    if (v := get("problem", "g_scale")) is not None:
        cfg.g_scale = _number(v, float, "problem.g_scale")
    if (v := get("problem", "g_file")) is not None:
        cfg.g_file = os.path.join(base, v)
    if (v := get("problem", "K")) is not None:
        cfg.K = _positive(_number(v, float, "problem.K"), "problem.K", strict=False)

    if (v := get("net", "frames")) is not None:
        cfg.frames = _positive(_number(v, int, "net.frames"), "net.frames")
    if (v := get("net", "profiles")) is not None:
        cfg.profiles = _positive(_number(v, int, "net.profiles"), "net.profiles")
    if (v := get("net", "seed")) is not None:
        cfg.net_seed = _positive(_number(v, int, "net.seed"), "net.seed", strict=False)

    if (v := get("solver", "tol")) is not None:
        cfg.tol = _positive(_number(v, float, "solver.tol"), "solver.tol")
    if (v := get("solver", "max_iters")) is not None:
        cfg.max_iters = _positive(_number(v, int, "solver.max_iters"), "solver.max_iters")
    if (v := get("solver", "method")) is not None:
        if v not in METHODS:
            raise ConfigError(f"solver.method must be one of {METHODS}", "solver.method")
        cfg.method = v
    if (v := get("solver", "linear_solver")) is not None:
        if v not in LINEAR_SOLVERS:
            raise ConfigError(f"solver.linear_solver must be one of {LINEAR_SOLVERS}", "solver.linear_solver")
        cfg.linear_solver = v

    if (v := get("ladder", "n")) is not None:
        cfg.n_list = [_positive(_number(x, int, "ladder.n"), "ladder.n") for x in v.split(",") if x.strip()]
        if not cfg.n_list or any(b <= a for a, b in zip(cfg.n_list, cfg.n_list[1:])):
            raise ConfigError("ladder.n must be a nonempty increasing list", "ladder.n")

    if (v := get("props", "pairs")) is not None:
        cfg.pairs = _positive(_number(v, int, "props.pairs"), "props.pairs")
    if (v := get("props", "cases")) is not None:
        cfg.cases = _positive(_number(v, int, "props.cases"), "props.cases")
    if (v := get("props", "seed")) is not None:
        cfg.props_seed = _positive(_number(v, int, "props.seed"), "props.seed", strict=False)

    if (v := get("audit", "u_file")) is not None:
        cfg.u_file = os.path.join(base, v)
    if (v := get("audit", "min_fraction")) is not None:
        cfg.min_fraction = _number(v, float, "audit.min_fraction")
        if not 0.0 <= cfg.min_fraction <= 1.0:
            raise ConfigError("audit.min_fraction must lie in [0, 1]", "audit.min_fraction")

    if (v := get("output", "dir")) is not None:
        cfg.out_dir = os.path.join(base, v)
    else:
        cfg.out_dir = os.path.join(base, cfg.out_dir)
    return cfg
