"""Run configuration, CSV formatting and run manifests.

Config files are INI-style key-value text::

    [model]
    q0 = 0.6
    rho_H = 0.8
    rho_L = 0.2
    lam = 1
    r = 0.1
    s = 1
    z = 2

    [run]
    k = 0.5
    N = 100
    N_list = 100, 1000, 10000
    replicates = 10000
    seed = 12345
    tol = 1e-10
    t1 = 0.1
    k_min = 0.0025
    k_max = 1
    k_points = 400
    workers = 1
    output_dir = out

Every key is optional; missing model keys fall back to the reference
parameter set and missing run keys to the defaults below. Command-line flags
override the file.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import time
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

from .model import ModelParams

FORMAT_VERSION = "1.0"
SIG_DIGITS = 12

MODEL_KEYS = ("q0", "rho_H", "rho_L", "lam", "r", "s", "z")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams.canonical)
    k: float = 0.5
    N: int = 100
    N_list: tuple[int, ...] = (100, 1000, 10000)
    replicates: int = 10000
    seed: int = 12345
    tol: float = 1e-10
    t1: float | None = None
    k_min: float = 0.0025
    k_max: float = 1.0
    k_points: int = 400
    workers: int = 1
    output_dir: str = "out"
    svg: bool = False

    def echo(self) -> dict:
        """Canonical, JSON-serialisable form used for hashing and manifests."""
        d = asdict(self)
        d["params"] = self.params.to_dict()
        d["N_list"] = list(self.N_list)
        return d

    def input_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


def _int(name, text):
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {text!r}") from None
    return value


def _float(name, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{name}: expected a number, got {text!r}") from None


def _check(cfg: RunConfig) -> RunConfig:
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not 0 < cfg.k <= 1:
        raise ConfigError(f"k must lie in (0, 1], got {cfg.k}")
    if cfg.N < 1 or any(n < 1 for n in cfg.N_list):
        raise ConfigError("agent counts must be positive")
    if any(b <= a for a, b in zip(cfg.N_list, cfg.N_list[1:])):
        raise ConfigError("N_list must be strictly increasing")
    if cfg.replicates < 1:
        raise ConfigError("replicates must be positive")
    if not 0 < cfg.tol <= 1e-3:
        raise ConfigError("tol must lie in (0, 1e-3]")
    if cfg.t1 is not None and cfg.t1 <= 0:
        raise ConfigError(f"t1 must be positive, got {cfg.t1}")
    if not (0 < cfg.k_min <= cfg.k_max <= 1) or cfg.k_points < 1:
        raise ConfigError("k-grid must satisfy 0 < k_min <= k_max <= 1 and k_points >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    return cfg


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read ``path`` (if given), then apply non-None ``overrides``."""
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keys are case-sensitive (rho_H, N)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        unknown = set(parser.sections()) - {"model", "run"}
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

        if parser.has_section("model"):
            sec = parser["model"]
            bad = set(sec) - set(MODEL_KEYS)
            if bad:
                raise ConfigError(f"unknown model key(s): {', '.join(sorted(bad))}")
            fields = cfg.params.to_dict()
            fields.update({key: _float(key, sec[key]) for key in sec})
            cfg = replace(cfg, params=ModelParams(**fields))

        if parser.has_section("run"):
            sec = parser["run"]
            conv = {
                "k": _float, "N": _int, "replicates": _int, "seed": _int, "tol": _float,
                "t1": _float, "k_min": _float, "k_max": _float, "k_points": _int,
                "workers": _int, "output_dir": lambda _, v: v,
                "svg": lambda n, v: v.strip().lower() in ("1", "true", "yes", "on"),
                "N_list": lambda n, v: tuple(_int(n, p) for p in v.replace(",", " ").split()),
            }
            updates = {}
            for key in sec:
                if key not in conv:
                    raise ConfigError(f"unknown run key: {key}")
                updates[key] = conv[key](key, sec[key])
            cfg = replace(cfg, **updates)

    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return _check(cfg)


def fmt(x) -> str:
    """Serialise a number at the fixed precision of all CSV payloads."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def write_csv(path: Path, header: list[str], rows, comments: dict | None = None) -> Path:
    lines = [f"# {key}={fmt(value)}" for key, value in (comments or {}).items()]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def append_csv(path: Path, header: list[str], row) -> Path:
    line = ",".join(fmt(v) for v in row) + "\n"
    if not path.exists():
        path.write_text(",".join(header) + "\n" + line)
    else:
        with path.open("a") as fh:
            fh.write(line)
    return path


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, command: str, cfg: RunConfig, outputs: list[Path],
                   started: float) -> Path:
    manifest = {
        "format_version": FORMAT_VERSION,
        "command": command,
        "config": cfg.echo(),
        "input_hash": cfg.input_hash(),
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        "outputs": [
            {"path": p.name, "sha256": sha256_file(p), "bytes": p.stat().st_size}
            for p in sorted(outputs)
        ],
    }
    path = out_dir / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
