"""Flat JSON pipeline configuration.

Precedence, lowest first: built-in defaults, the ``--config`` file, then
command-line flags.  Unknown keys and out-of-range values are rejected with
:class:`ConfigError`.
"""

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .simulate import PRESETS
from .solver import MODES

CONFIDENCE_PROVIDERS = ("oracle", "baseline", "file")
POSE_PROVIDERS = ("oracle", "markers", "file")


@dataclass
class PipelineConfig:
    # simulation
    preset: str = "hand16"
    duration_s: float = 4.0
    frame_rate: float = 60.0
    seed: int = 0
    occlusion_body: float = 0.005
    occlusion_hand: float = 0.06
    ghost_rate: float = 0.5
    jitter_sigma: float = 0.0      # meters, Gaussian
    jitter_uniform: float = 0.0    # meters, uniform half-width
    shuffle: bool = True
    # frame-wise assignment
    iterations: int = 20
    dustbin_score: float = 0.0
    accept_threshold: float = 0.3
    confidence_provider: str = "oracle"
    oracle_signal: float = 4.0
    oracle_noise: float = 1.0
    oracle_temperature: float = 1.0
    # tracklets
    use_tracklets: bool = True
    window: int = 30
    max_frame_gap: int = 3
    th_pos: float = 0.05
    th_fet: float = 0.5
    lambda_fet: float = 0.1
    q: float = 1.0
    # solving
    solver_mode: str = "corrected"
    pose_provider: str = "oracle"
    position_sigma: float = 0.0
    twist_sigma: float = 0.0
    offset_sigma: float = 0.0
    jitter_sweep: bool = False
    # paths; None means the standard file name inside ``out`` (or ``input_dir``)
    out: str = "out"
    input_dir: Optional[str] = None
    scores_path: Optional[str] = None
    estimates_path: Optional[str] = None
    labels_path: Optional[str] = None
    motion_path: Optional[str] = None
    truth_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for f in fields(self):
            v = getattr(self, f.name)
            want = f.type
            if want in (float,) and isinstance(v, int) and not isinstance(v, bool):
                setattr(self, f.name, float(v))
                v = float(v)
            ok = {
                str: isinstance(v, str),
                float: isinstance(v, float) and math.isfinite(v),
                int: isinstance(v, int) and not isinstance(v, bool),
                bool: isinstance(v, bool),
                Optional[str]: v is None or isinstance(v, str),
            }[want]
            if not ok:
                raise ConfigError(f"{f.name}: expected {getattr(want, '__name__', 'string or null')}, "
                                  f"got {v!r}")
        _choice("preset", self.preset, PRESETS)
        _choice("confidence_provider", self.confidence_provider, CONFIDENCE_PROVIDERS)
        _choice("pose_provider", self.pose_provider, POSE_PROVIDERS)
        _choice("solver_mode", self.solver_mode, MODES)
        _range("duration_s", self.duration_s, 0.0, None)
        _range("frame_rate", self.frame_rate, 0.0, None, open_low=True)
        _range("seed", self.seed, 0, None)
        for name in ("occlusion_body", "occlusion_hand", "accept_threshold"):
            _range(name, getattr(self, name), 0.0, 1.0)
        for name in ("ghost_rate", "jitter_sigma", "jitter_uniform", "oracle_noise", "lambda_fet",
                     "q", "position_sigma", "twist_sigma", "offset_sigma"):
            _range(name, getattr(self, name), 0.0, None)
        _range("oracle_temperature", self.oracle_temperature, 0.0, None, open_low=True)
        _range("th_pos", self.th_pos, 0.0, None, open_low=True)
        _range("th_fet", self.th_fet, 0.0, 2.0)
        for name in ("iterations", "window", "max_frame_gap"):
            _range(name, getattr(self, name), 1, None)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, overrides=None):
        """Read ``path`` (may be None) and apply ``overrides`` on top."""
        d = {}
        if path is not None:
            try:
                d = json.loads(Path(path).read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: invalid JSON ({e})") from None
            if not isinstance(d, dict):
                raise ConfigError("config must be a JSON object")
        d.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(d)

    def to_dict(self):
        return asdict(self)

    def path(self, key, default_name, base=None):
        v = getattr(self, key)
        if v is not None:
            return Path(v)
        return Path(base or self.out) / default_name

    @property
    def source_dir(self):
        return Path(self.input_dir or self.out)

    @property
    def occlusion(self):
        return {"body": self.occlusion_body, "left_hand": self.occlusion_hand,
                "right_hand": self.occlusion_hand}


def _choice(name, v, options):
    if v not in options:
        raise ConfigError(f"{name}: {v!r} not in {list(options)}")


def _range(name, v, lo, hi, open_low=False):
    bad = (v <= lo if open_low else v < lo) or (hi is not None and v > hi)
    if bad:
        lo_s = f"({lo}" if open_low else f"[{lo}"
        raise ConfigError(f"{name}: {v!r} outside {lo_s}, {'inf)' if hi is None else f'{hi}]'}")
