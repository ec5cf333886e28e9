"""Tracker configuration."""
from __future__ import annotations

from dataclasses import dataclass, fields

from .association import MaskThresholds, Variant


@dataclass(frozen=True)
class TrackerConfig:
    det_high: float = 0.6
    det_low_floor: float = 0.1
    new_track: float = 0.7
    match_stage1: float = 0.8
    match_stage2: float = 0.5
    match_unconfirmed: float = 0.7
    track_buffer: int = 30
    mask_conf: float = 0.6
    mc_min: float = 0.9
    mf_min: float = 0.05
    variant: Variant = Variant.MCBYTE

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name in ("variant", "track_buffer"):
                continue
            value = getattr(self, f.name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f.name, f"{value} is outside [0, 1]")
        if self.track_buffer < 1:
            raise ConfigError("track_buffer", f"{self.track_buffer} must be >= 1")
        if not self.det_low_floor < self.det_high:
            raise ConfigError("det_low_floor", "must be below det_high")
        if not self.det_high < self.new_track:
            raise ConfigError("new_track", "must be above det_high")
        if not isinstance(self.variant, Variant):
            raise ConfigError("variant", f"{self.variant!r} is not a Variant")

    @property
    def mask_thresholds(self) -> MaskThresholds:
        return MaskThresholds(self.mask_conf, self.mc_min, self.mf_min)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
