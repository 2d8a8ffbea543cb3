"""Run configuration: a flat ``key = value`` file with an optional ``[link]`` section.

Grids are comma-separated values. Example::

    delta_hz = 50e9
    temperature_k = 0.1, 0.25, 0.5
    gamma_s_inv = 1e6
    t_max_s = 1e-3
    n_samples = 200

    [link]
    length_km = 0, 10, 20, 50
    encoding = dual_rail, single_rail
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .g4v import ModelConstants
from .link import ENCODINGS, LinkConfig

_ROOT = "run"

TOP_KEYS = {
    "delta_hz",
    "temperature_k",
    "g0chi0",
    "gamma_s_inv",
    "omega_a_prime_rad_s",
    "t_max_s",
    "n_samples",
    "output_path",
}
LINK_KEYS = {
    "length_km",
    "alpha_db_per_km",
    "c_medium_m_s",
    "encoding",
    "dark_count_prob",
    "visibility",
    "marked_length_km",
}


class ConfigError(ValueError):
    pass


def _floats(key: str, raw: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected number(s), got {raw!r}") from None
    if not vals:
        raise ConfigError(f"{key}: empty value")
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{key}: values must be finite")
    return vals


def _float(key: str, raw: str) -> float:
    vals = _floats(key, raw)
    if len(vals) != 1:
        raise ConfigError(f"{key}: expected a single number, got {len(vals)}")
    return vals[0]


@dataclass(frozen=True)
class LinkBlock:
    length_km: tuple[float, ...]
    alpha_db_per_km: float = 0.2
    c_medium_m_s: float = 2.0e8
    encoding: tuple[str, ...] = ("dual_rail",)
    dark_count_prob: float = 0.0
    visibility: float = 1.0
    marked_length_km: tuple[float, ...] = ()

    def link_config(self, encoding: str) -> LinkConfig:
        return LinkConfig(
            0.0, self.alpha_db_per_km, self.c_medium_m_s, encoding, self.dark_count_prob, self.visibility
        )

    def marked(self) -> tuple[float, ...]:
        """Lengths for density-matrix dumps; defaults to four grid points."""
        if self.marked_length_km:
            return self.marked_length_km
        grid = self.length_km
        if len(grid) <= 4:
            return grid
        idx = sorted({0, len(grid) // 3, (2 * len(grid)) // 3, len(grid) - 1})
        return tuple(grid[i] for i in idx)


@dataclass(frozen=True)
class RunConfig:
    delta_hz: float
    temperature_k: tuple[float, ...]
    t_max_s: tuple[float, ...]
    n_samples: int
    g0chi0: Optional[float] = None
    gamma_s_inv: Optional[float] = None
    omega_a_prime_rad_s: Optional[float] = None
    output_path: Optional[str] = None
    link: Optional[LinkBlock] = field(default=None)

    def constants(self, temperature: float) -> ModelConstants:
        return ModelConstants.physical(
            self.delta_hz,
            temperature,
            g0chi0=self.g0chi0,
            gamma=self.gamma_s_inv,
            omega_a_prime=self.omega_a_prime_rad_s,
        )

    def horizon(self, i: int) -> float:
        return self.t_max_s[0] if len(self.t_max_s) == 1 else self.t_max_s[i]

    def resolved(self) -> dict:
        d = asdict(self)
        c = self.constants(self.temperature_k[0])
        d["g0chi0"] = c.g0chi0
        d["gamma_s_inv"] = c.gamma
        d["omega_a_prime_rad_s"] = c.omega_a_prime
        return d


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), default_section="__none__")
    try:
        cp.read_string(f"[{_ROOT}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for sec in cp.sections():
        if sec not in (_ROOT, "link"):
            raise ConfigError(f"unknown section [{sec}]")
    top = dict(cp[_ROOT])
    unknown = set(top) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    for key in ("delta_hz", "temperature_k", "t_max_s", "n_samples"):
        if key not in top:
            raise ConfigError(f"{key}: missing required key")
    if ("g0chi0" in top) == ("gamma_s_inv" in top):
        raise ConfigError("g0chi0 / gamma_s_inv: give exactly one of them")

    delta = _float("delta_hz", top["delta_hz"])
    if delta <= 0:
        raise ConfigError("delta_hz: must be > 0")
    temps = _floats("temperature_k", top["temperature_k"])
    if any(t <= 0 for t in temps):
        raise ConfigError("temperature_k: must be > 0")
    t_max = _floats("t_max_s", top["t_max_s"])
    if any(t <= 0 for t in t_max):
        raise ConfigError("t_max_s: must be > 0")
    if len(t_max) not in (1, len(temps)):
        raise ConfigError("t_max_s: give one value or one per temperature")
    try:
        n_samples = int(top["n_samples"])
    except ValueError:
        raise ConfigError(f"n_samples: expected an integer, got {top['n_samples']!r}") from None
    if n_samples < 3:
        raise ConfigError("n_samples: must be >= 3")
    g0chi0 = _float("g0chi0", top["g0chi0"]) if "g0chi0" in top else None
    gamma = _float("gamma_s_inv", top["gamma_s_inv"]) if "gamma_s_inv" in top else None
    if (g0chi0 if g0chi0 is not None else gamma) < 0:
        raise ConfigError("g0chi0 / gamma_s_inv: must be >= 0")
    omega = _float("omega_a_prime_rad_s", top["omega_a_prime_rad_s"]) if "omega_a_prime_rad_s" in top else None

    link = None
    if cp.has_section("link"):
        link = _parse_link(dict(cp["link"]))
    return RunConfig(delta, temps, t_max, n_samples, g0chi0, gamma, omega, top.get("output_path"), link)


def _parse_link(sec: dict) -> LinkBlock:
    unknown = set(sec) - LINK_KEYS
    if unknown:
        raise ConfigError(f"[link] unknown key(s): {', '.join(sorted(unknown))}")
    if "length_km" not in sec:
        raise ConfigError("[link] length_km: missing required key")
    kw = {"length_km": _floats("length_km", sec["length_km"])}
    if any(x < 0 for x in kw["length_km"]):
        raise ConfigError("[link] length_km: must be >= 0")
    for key in ("alpha_db_per_km", "c_medium_m_s", "dark_count_prob", "visibility"):
        if key in sec:
            kw[key] = _float(key, sec[key])
    if "marked_length_km" in sec:
        kw["marked_length_km"] = _floats("marked_length_km", sec["marked_length_km"])
    if "encoding" in sec:
        enc = tuple(e.strip() for e in sec["encoding"].split(",") if e.strip())
        bad = [e for e in enc if e not in ENCODINGS]
        if bad or not enc:
            raise ConfigError(f"[link] encoding: expected any of {ENCODINGS}, got {sec['encoding']!r}")
        kw["encoding"] = enc
    block = LinkBlock(**kw)
    try:
        for enc in block.encoding:
            block.link_config(enc)
    except ValueError as exc:
        raise ConfigError(f"[link] {exc}") from None
    if block.dark_count_prob != 0.0 or block.visibility != 1.0:
        raise ConfigError("[link] dark_count_prob / visibility: only 0 and 1 are supported")
    return block


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
