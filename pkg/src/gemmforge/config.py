"""Run configuration: key=value files, environment overrides, CLI overrides.

Grammar: one `key = value` per line, `#` starts a comment, blank lines are
ignored.  Unknown keys are rejected, with the line number.  Recognized keys:

  mr nr mc kc nc        blocking parameters (integers)
  kernel                micro-kernel name
  parallel_loop         ic | jr
  threads               worker count
  size_min size_max size_step   square sweep bounds
  shapes                explicit sweep shapes, "m,n,k; m,n,k; ..."
  check                 true | false: verify each result against the oracle
  algorithms            comma-separated variant names
  seed                  operand generator seed
  format                table | csv | matlab

Precedence: CLI flag > environment variable > file > built-in default.
Environment variables: BLISLAB_IC_NT (threads), BLISLAB_KERNEL (kernel),
BLISLAB_THREAD_LOOP (parallel_loop).

Validation reports every violated invariant, not just the first.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from .goto import GotoParams, param_violations
from .parallel import MAX_THREADS
from .registry import default_registry

__all__ = ["Config", "ConfigError", "load_config", "validate", "config_to_text", "load_grid"]

ENV_KEYS = {
    "BLISLAB_IC_NT": "threads",
    "BLISLAB_KERNEL": "kernel",
    "BLISLAB_THREAD_LOOP": "parallel_loop",
}

_FORMATS = ("table", "csv", "matlab")
_LOOPS = ("ic", "jr")


class ConfigError(ValueError):
    """Raised for parse errors and invariant violations; the message carries
    every problem found, one per line."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass(frozen=True)
class Config:
    """Fully resolved run configuration."""

    goto: GotoParams = field(default_factory=GotoParams)
    threads: int = 1
    parallel_loop: str = "ic"
    size_min: int = 16
    size_max: int = 1024
    size_step: int = 16
    shapes: tuple[tuple[int, int, int], ...] | None = None
    check: bool = False
    algorithms: tuple[str, ...] = ("goto",)
    seed: int = 42
    format: str = "table"

    def sweep_shapes(self) -> list[tuple[int, int, int]]:
        """Shapes the bench sweep runs: explicit shapes if set, else the
        square sizes size_min..size_max in steps of size_step."""
        if self.shapes is not None:
            return list(self.shapes)
        return [(s, s, s) for s in range(self.size_min, self.size_max + 1, self.size_step)]


def _parse_int(text: str, key: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ValueError(f"{key} expects an integer, got {text!r}") from None


def _parse_bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"{key} expects true or false, got {text!r}")


def _parse_names(text: str, key: str) -> tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    if not names:
        raise ValueError(f"{key} expects at least one name")
    return names


def _parse_shapes(text: str, key: str) -> tuple[tuple[int, int, int], ...]:
    shapes = []
    for group in text.split(";"):
        group = group.strip()
        if not group:
            continue
        parts = [p.strip() for p in group.split(",")]
        if len(parts) != 3:
            raise ValueError(f"{key} expects m,n,k triples, got {group!r}")
        shapes.append(tuple(_parse_int(p, key) for p in parts))
    if not shapes:
        raise ValueError(f"{key} expects at least one m,n,k triple")
    return tuple(shapes)


# key -> (converter, destination attribute); goto params are flattened.
_KEYS = {
    "mr": (_parse_int, "mr"),
    "nr": (_parse_int, "nr"),
    "mc": (_parse_int, "mc"),
    "kc": (_parse_int, "kc"),
    "nc": (_parse_int, "nc"),
    "kernel": (lambda t, k: t.strip(), "kernel"),
    "parallel_loop": (lambda t, k: t.strip(), "parallel_loop"),
    "threads": (_parse_int, "threads"),
    "size_min": (_parse_int, "size_min"),
    "size_max": (_parse_int, "size_max"),
    "size_step": (_parse_int, "size_step"),
    "shapes": (_parse_shapes, "shapes"),
    "check": (_parse_bool, "check"),
    "algorithms": (_parse_names, "algorithms"),
    "seed": (_parse_int, "seed"),
    "format": (lambda t, k: t.strip(), "format"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the key=value grammar into typed values.

    All parse problems are collected and raised together as a ConfigError,
    each tagged with its line number.
    """
    values = {}
    problems = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{ln}: expected key = value, got {raw.strip()!r}")
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEYS:
            problems.append(f"{source}:{ln}: unknown key {key!r}")
            continue
        conv, dest = _KEYS[key]
        try:
            values[dest] = conv(val, key)
        except ValueError as e:
            problems.append(f"{source}:{ln}: {e}")
    if problems:
        raise ConfigError(problems)
    return values


def validate(params: GotoParams) -> list[str]:
    """Every violated blocking-parameter invariant (empty list when valid).

    Violations are data, not exceptions, and all of them are reported:

        validate(GotoParams())                        -> []
        validate(GotoParams(mr=0))                    -> ["mr=0 violates 1 <= mr <= 12"]
        validate(GotoParams(mc=63, nc=10))            -> ["mc=63 not a multiple of mr=4",
                                                          "nc=10 not a multiple of nr=4"]
    """
    return param_violations(params)


def _validate_config(cfg: Config) -> list[str]:
    problems = list(param_violations(cfg.goto))
    reg = default_registry()
    if cfg.goto.micro_kernel not in reg.micro_kernel_names():
        problems.append(
            f"kernel={cfg.goto.micro_kernel!r} not registered; "
            f"known: {reg.micro_kernel_names()}"
        )
    for name in cfg.algorithms:
        if name not in reg.variant_names():
            problems.append(
                f"algorithm {name!r} not registered; known: {reg.variant_names()}"
            )
    if not 1 <= cfg.threads <= MAX_THREADS:
        problems.append(f"threads={cfg.threads} outside supported range 1..{MAX_THREADS}")
    if cfg.parallel_loop not in _LOOPS:
        problems.append(f"parallel_loop={cfg.parallel_loop!r} must be ic or jr")
    if cfg.format not in _FORMATS:
        problems.append(f"format={cfg.format!r} must be one of {_FORMATS}")
    if cfg.size_min < 1:
        problems.append(f"size_min={cfg.size_min} violates size_min >= 1")
    if cfg.size_step < 1:
        problems.append(f"size_step={cfg.size_step} violates size_step >= 1")
    if cfg.size_min > cfg.size_max:
        problems.append(f"size_min={cfg.size_min} exceeds size_max={cfg.size_max}")
    if cfg.shapes is not None:
        for m, n, k in cfg.shapes:
            if m < 1 or n < 1 or k < 1:
                problems.append(f"shape {m},{n},{k} has a non-positive dimension")
    if cfg.seed < 0 or cfg.seed > 0xFFFFFFFFFFFFFFFF:
        problems.append(f"seed={cfg.seed} outside 0..2**64-1")
    return problems


def _apply(values: dict, goto_kw: dict, cfg_kw: dict) -> None:
    for dest, val in values.items():
        if dest in ("mr", "nr", "mc", "kc", "nc"):
            goto_kw[dest] = val
        elif dest == "kernel":
            goto_kw["micro_kernel"] = val
        else:
            cfg_kw[dest] = val


def load_config(path: str | None = None, env: dict | None = None,
                cli: dict | None = None) -> Config:
    """Resolve a Config from a file, the environment and CLI overrides.

    cli maps destination names (threads, size_min, kernel, ...) to already
    typed values or raw strings; None values are ignored.  Raises
    ConfigError carrying every parse problem and invariant violation.
    """
    goto_kw: dict = {}
    cfg_kw: dict = {}

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path!r}: {e}") from None
        _apply(parse_config_text(text, source=str(path)), goto_kw, cfg_kw)

    env = os.environ if env is None else env
    env_values = {}
    problems = []
    for var, dest in ENV_KEYS.items():
        if var in env and str(env[var]).strip() != "":
            key = "kernel" if dest == "kernel" else dest
            conv, _ = _KEYS[key]
            try:
                env_values[dest] = conv(str(env[var]), key)
            except ValueError as e:
                problems.append(f"environment {var}: {e}")
    if problems:
        raise ConfigError(problems)
    _apply(env_values, goto_kw, cfg_kw)

    if cli:
        cli_values = {}
        for dest, val in cli.items():
            if val is None:
                continue
            key = "kernel" if dest == "kernel" else dest
            if key not in _KEYS:
                raise ConfigError(f"unknown override {dest!r}")
            conv, _ = _KEYS[key]
            cli_values[dest] = conv(str(val), key) if isinstance(val, str) else val
        _apply(cli_values, goto_kw, cfg_kw)

    cfg = Config(goto=GotoParams(**goto_kw), **cfg_kw)
    bad = _validate_config(cfg)
    if bad:
        raise ConfigError(bad)
    return cfg


def config_to_text(cfg: Config) -> str:
    """Serialize a Config in the same grammar load_config reads.

    load_config on the result reproduces the Config exactly.
    """
    lines = [
        f"mr = {cfg.goto.mr}",
        f"nr = {cfg.goto.nr}",
        f"mc = {cfg.goto.mc}",
        f"kc = {cfg.goto.kc}",
        f"nc = {cfg.goto.nc}",
        f"kernel = {cfg.goto.micro_kernel}",
        f"parallel_loop = {cfg.parallel_loop}",
        f"threads = {cfg.threads}",
        f"size_min = {cfg.size_min}",
        f"size_max = {cfg.size_max}",
        f"size_step = {cfg.size_step}",
        f"check = {'true' if cfg.check else 'false'}",
        f"algorithms = {','.join(cfg.algorithms)}",
        f"seed = {cfg.seed}",
        f"format = {cfg.format}",
    ]
    if cfg.shapes is not None:
        lines.append("shapes = " + "; ".join(f"{m},{n},{k}" for m, n, k in cfg.shapes))
    return "\n".join(lines) + "\n"


_GRID_KEYS = ("mr", "nr", "mc", "kc", "nc")


def load_grid(path: str) -> dict[str, list[int]]:
    """Read a tuning grid: key = comma-separated candidate values.

    Keys are the five blocking parameters; a key left out keeps its
    configured value.  Same comment and error conventions as config files.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read grid {path!r}: {e}") from None
    grid: dict[str, list[int]] = {}
    problems = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{path}:{ln}: expected key = values, got {raw.strip()!r}")
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _GRID_KEYS:
            problems.append(f"{path}:{ln}: unknown grid key {key!r}")
            continue
        try:
            vals = [_parse_int(p.strip(), key) for p in val.split(",") if p.strip()]
        except ValueError as e:
            problems.append(f"{path}:{ln}: {e}")
            continue
        if not vals:
            problems.append(f"{path}:{ln}: {key} lists no values")
            continue
        grid[key] = vals
    if problems:
        raise ConfigError(problems)
    if not grid:
        raise ConfigError(f"{path}: grid file defines no parameters")
    return grid


def with_params(cfg: Config, params: GotoParams) -> Config:
    """Copy of cfg with different blocking parameters."""
    return replace(cfg, goto=params)
