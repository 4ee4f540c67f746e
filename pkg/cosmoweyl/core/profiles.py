"""Run configuration for cosmoweyl.

Loads run profiles from JSON files and key = value config files. Falls
back to built-in defaults if no profile file is found. Precedence is
defaults < profile < config file < command-line flags.
"""

from __future__ import annotations

import configparser
import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .charts import SDS_GAUGES, ChartTag, SdSParams
from .errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "COSMOWEYL_THREADS"


@dataclass
class Config:
    """Parameters shared by every subcommand."""

    lam: float = 3.0
    m: float = 0.1
    n_theta: int = 32
    n_phi: int = 64
    n_u: int = 64
    fd_scale: float = 1e-3
    tolerance: float = 1e-5
    gauge: str = ChartTag.EF.value
    output_dir: str = "out"
    eps0: float = 0.1
    c0: float = 4.0
    threads: int = 0                 # 0 = one per CPU, capped by COSMOWEYL_THREADS

    @classmethod
    def from_dict(cls, data: dict) -> Config:
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(k for k in data if k not in known and k != "notes")
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return replace(cls(), **_coerce({k: v for k, v in data.items() if k in known}))

    def merged(self, overrides: dict) -> Config:
        """Copy with the non-None entries of *overrides* applied."""
        data = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **_coerce(data)) if data else self

    def validate(self) -> Config:
        try:
            SdSParams(self.lam, self.m)
        except ValueError as exc:
            raise ConfigError(f"invalid Schwarzschild-de Sitter parameters: {exc}") from exc
        for name in ("n_theta", "n_phi", "n_u"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be at least 2")
        for name in ("fd_scale", "tolerance", "eps0", "c0"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.gauge not in {g.value for g in SDS_GAUGES}:
            raise ConfigError(f"unknown gauge: {self.gauge}")
        if self.threads < 0:
            raise ConfigError("threads must be non-negative")
        return self

    @property
    def params(self) -> SdSParams:
        return SdSParams(self.lam, self.m)

    @property
    def chart(self) -> ChartTag:
        return ChartTag(self.gauge)

    def worker_count(self) -> int:
        """Threads for grid evaluation, capped by COSMOWEYL_THREADS."""
        n = self.threads or (os.cpu_count() or 1)
        cap = os.environ.get(THREADS_ENV)
        if cap:
            try:
                n = min(n, max(1, int(cap)))
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
        return n

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(data: dict) -> dict:
    types = {f.name: f.type for f in fields(Config)}
    out = {}
    for key, value in data.items():
        kind = types[key]
        try:
            if kind == "int":
                out[key] = int(value)
            elif kind == "float":
                out[key] = float(value)
            else:
                out[key] = str(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r}: cannot read {value!r} as {kind}") from None
    return out


def _default_profiles_dir() -> Path:
    """cosmoweyl/profiles next to the package sources."""
    return Path(__file__).resolve().parent.parent / "profiles"


class ProfileLoader:
    """Loads *Config* from JSON profiles and key = value config files."""

    _DEFAULT_PROFILE_NAME = "default.json"

    def __init__(self, profiles_dir: str | Path | None = None) -> None:
        if profiles_dir is not None:
            self._dir = Path(profiles_dir)
        else:
            self._dir = _default_profiles_dir()

    @property
    def profiles_dir(self) -> Path:
        return self._dir

    def list_profiles(self) -> list[str]:
        """Return the names of available profile JSON files."""
        if not self._dir.is_dir():
            return []
        return sorted(p.name for p in self._dir.glob("*.json"))

    def load(self, name: str | None = None) -> Config:
        """Load a profile by filename (within *profiles_dir*).

        The ``.json`` suffix is optional. Returns the built-in default if
        the file doesn't exist.
        """
        target = name or self._DEFAULT_PROFILE_NAME
        if not target.endswith(".json"):
            target += ".json"
        path = self._dir / target

        if not path.is_file():
            if name is not None:
                logger.warning("profile %s not found, using built-in defaults", target)
            return Config()

        return self.load_path(path)

    def load_path(self, path: str | Path) -> Config:
        """Load a JSON profile from an arbitrary path."""
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read profile {path}: {exc}") from exc
        logger.info("loaded profile %s", path)
        return Config.from_dict(data)

    def load_config_file(self, path: str | Path, base: Config | None = None) -> Config:
        """Apply a key = value file on top of *base*.

        Keys may sit at the top of the file or under a ``[cosmoweyl]`` section.
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        parser = configparser.ConfigParser()
        try:
            parser.read_string("[cosmoweyl]\n" + text if not text.lstrip().startswith("[") else text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        data: dict[str, str] = {}
        for section in parser.sections():
            data.update(parser[section])
        base = base or Config()
        unknown = sorted(k for k in data if k not in {f.name for f in fields(Config)})
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return base.merged(data)
