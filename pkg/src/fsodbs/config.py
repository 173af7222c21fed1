"""Network configuration and the flat key-value file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .models import AccessChannelParams, AltitudeBounds, FsoLinkParams


@dataclass(frozen=True)
class NetworkConfig:
    access: AccessChannelParams = field(default_factory=AccessChannelParams)
    fso: FsoLinkParams = field(default_factory=FsoLinkParams)
    altitude: AltitudeBounds = field(default_factory=AltitudeBounds)
    h_m: float = 20.0

    def replace(self, **overrides: Any) -> "NetworkConfig":
        """Return a copy with flat parameter names overridden.

        ``cfg.replace(divergence=2e-4, B=10e6)`` routes each key to the
        sub-structure that owns it.
        """
        groups: dict[str, dict[str, Any]] = {"access": {}, "fso": {}, "altitude": {}}
        top: dict[str, Any] = {}
        for key, value in overrides.items():
            owner = _OWNER.get(key)
            if owner is None:
                raise KeyError(f"unknown configuration key {key!r}")
            if owner == "top":
                top[key] = value
            else:
                groups[owner][key] = value
        return dataclasses.replace(
            self,
            access=dataclasses.replace(self.access, **groups["access"]),
            fso=dataclasses.replace(self.fso, **groups["fso"]),
            altitude=dataclasses.replace(self.altitude, **groups["altitude"]),
            **top,
        )

    def flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in ("access", "fso", "altitude"):
            out.update({f"{name}.{k}": v for k, v in dataclasses.asdict(getattr(self, name)).items()})
        out["h_m"] = self.h_m
        return out

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetworkConfig":
        return cls(
            access=AccessChannelParams(**data["access"]),
            fso=FsoLinkParams(**data["fso"]),
            altitude=AltitudeBounds(**data["altitude"]),
            h_m=data.get("h_m", 20.0),
        )


_OWNER: dict[str, str] = {"h_m": "top"}
for _group, _cls in (("access", AccessChannelParams), ("fso", FsoLinkParams), ("altitude", AltitudeBounds)):
    for _f in dataclasses.fields(_cls):
        # `c` lives in both access and fso; a flat override sets both
        _OWNER.setdefault(_f.name, _group)


def _coerce(raw: str) -> Any:
    text = raw.strip()
    if text.lower() in ("none", "null", ""):
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def parse_key_values(text: str) -> dict[str, Any]:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                break
        else:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = _coerce(value)
    return out


def load_key_values(path: str | Path) -> dict[str, Any]:
    return parse_key_values(Path(path).read_text())


def config_keys() -> set[str]:
    return set(_OWNER)


def apply_overrides(config: NetworkConfig, values: Mapping[str, Any]) -> NetworkConfig:
    """Apply the subset of ``values`` that names configuration parameters."""
    known = {k: v for k, v in values.items() if k in _OWNER}
    if "c" in known:
        c = known.pop("c")
        config = dataclasses.replace(
            config,
            access=dataclasses.replace(config.access, c=c),
            fso=dataclasses.replace(config.fso, c=c),
        )
    for key in ("h_m",):
        if key in known and known[key] is None:
            raise ValueError(f"{key} cannot be empty")
    return config.replace(**known) if known else config
