"""Model configuration: stage widths, depths, attention geometry.

The config fixes every tensor shape in the network. The main coder has
four stages (x16 total resampling), the hyper coder two more (x4); the
decoder mirrors the encoder exactly. Defaults are toy-scale.
"""

import json
import zlib
from dataclasses import asdict, dataclass

from .errors import ConfigError

MAIN_STAGES = 4
HYPER_STAGES = 2


@dataclass(frozen=True)
class ModelConfig:
    config_id: int = 1
    main_channels: tuple = (16, 32, 48, 64)
    hyper_channels: tuple = (48, 32)
    depths: tuple = (1, 1, 2, 2, 1, 1)
    kernel_sizes: tuple = (5, 3, 3, 5, 3, 3)
    window: int = 5
    heads: int = 2
    mlp_ratio: int = 2

    def __post_init__(self):
        object.__setattr__(self, "main_channels", tuple(int(c) for c in self.main_channels))
        object.__setattr__(self, "hyper_channels", tuple(int(c) for c in self.hyper_channels))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        object.__setattr__(self, "kernel_sizes", tuple(int(k) for k in self.kernel_sizes))
        self.validate()

    def validate(self):
        if not 0 <= self.config_id <= 255:
            raise ConfigError(f"config_id must fit a byte, got {self.config_id}")
        if len(self.main_channels) != MAIN_STAGES:
            raise ConfigError(f"need {MAIN_STAGES} main stage widths")
        if len(self.hyper_channels) != HYPER_STAGES:
            raise ConfigError(f"need {HYPER_STAGES} hyper stage widths")
        n_stages = MAIN_STAGES + HYPER_STAGES
        if len(self.depths) != n_stages or any(d < 0 for d in self.depths):
            raise ConfigError("depths must list one non-negative count per stage")
        if len(self.kernel_sizes) != n_stages:
            raise ConfigError("kernel_sizes must list one size per stage")
        for k in self.kernel_sizes:
            if k not in (3, 5):
                raise ConfigError(f"resampling kernel size must be 3 or 5, got {k}")
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError(f"attention window must be odd and positive, got {self.window}")
        if self.heads < 1:
            raise ConfigError("heads must be positive")
        if self.mlp_ratio < 1:
            raise ConfigError("mlp_ratio must be >= 1")
        for c in (*self.main_channels, *self.hyper_channels):
            if c < 1 or c % self.heads:
                raise ConfigError(
                    f"every stage width must be positive and divisible by heads={self.heads}"
                )
        if self.latent_channels % 8:
            raise ConfigError(
                f"latent width must be divisible by 8 for channel grouping, "
                f"got {self.latent_channels}"
            )

    @property
    def latent_channels(self):
        """C_y: channels of the coded latent."""
        return self.main_channels[-1]

    @property
    def hyper_latent_channels(self):
        """C_z: channels of the hyper latent."""
        return self.hyper_channels[-1]

    @property
    def psi_channels(self):
        """Hyper features carry mean/scale context: 2 * C_y."""
        return 2 * self.latent_channels

    def stage_width(self, stage):
        """Feature width after the resampling conv of stage 1..6."""
        if 1 <= stage <= MAIN_STAGES:
            return self.main_channels[stage - 1]
        return self.hyper_channels[stage - MAIN_STAGES - 1]

    def stage_input_width(self, stage):
        """Feature width entering stage 1..6 on the encoder side."""
        if stage == 1:
            return 3
        if stage == MAIN_STAGES + 1:
            return self.latent_channels
        return self.stage_width(stage - 1)

    def hash(self):
        """Stable 32-bit identity used by the weight-file format."""
        canon = json.dumps(asdict(self), sort_keys=True).encode()
        return zlib.crc32(canon) & 0xFFFFFFFF

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        return cls(**data)
