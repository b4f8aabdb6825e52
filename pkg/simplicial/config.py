"""
Configuration for exact enumeration, sampling and tension experiments.
Defaults live on the class; YAML files and CLI flags override them per run.
"""

from typing import Any, Dict

import yaml


class SimplicialConfig:
    """Run configuration shared by the library entry points and the CLI"""

    # Exact computation caps
    DEFAULT_ENUMERATION_CAP = 24  # free vertices of R
    DEFAULT_HYPERDET_CAP = 10 ** 8  # (n!)^(m-1) Leibniz tuples
    DEFAULT_TORUS_CAP = 12  # free torus sites

    # Sampling
    DEFAULT_SEED = 0
    DEFAULT_STEPS = 1000
    DEFAULT_BURNIN = 10000
    DEFAULT_CHAINS = 1
    DEFAULT_SAMPLES = 100
    DEFAULT_MAX_DOUBLINGS = 30  # CFTP horizon 2^30

    # Output
    DEFAULT_LOG_PRECISION = 50  # decimal digits for sigma_n
    DEFAULT_TIMEZONE = "UTC"
    DEFAULT_WORKERS = 1

    def __init__(self, **overrides):
        self.enumeration_cap = self.DEFAULT_ENUMERATION_CAP
        self.hyperdet_cap = self.DEFAULT_HYPERDET_CAP
        self.torus_cap = self.DEFAULT_TORUS_CAP
        self.seed = self.DEFAULT_SEED
        self.steps = self.DEFAULT_STEPS
        self.burnin = self.DEFAULT_BURNIN
        self.chains = self.DEFAULT_CHAINS
        self.samples = self.DEFAULT_SAMPLES
        self.max_doublings = self.DEFAULT_MAX_DOUBLINGS
        self.log_precision = self.DEFAULT_LOG_PRECISION
        self.timezone = self.DEFAULT_TIMEZONE
        self.workers = self.DEFAULT_WORKERS
        self.update(overrides)

    def update(self, values: Dict[str, Any]):
        for key, value in values.items():
            if key not in self.__dict__:
                raise KeyError(f"Unknown config key: {key}")
            setattr(self, key, value)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)

    def __repr__(self):
        return f"SimplicialConfig({self.to_dict()})"


def load_config(path: str) -> SimplicialConfig:
    with open(path, "r", encoding="utf-8") as f:
        values = yaml.safe_load(f) or {}
    if not isinstance(values, dict):
        raise ValueError(f"Config file {path} must hold a flat key-value mapping")
    return SimplicialConfig(**values)


def validate_config(cfg: SimplicialConfig) -> tuple[bool, str]:
    """
    Validate config values

    Args:
        cfg: Resolved configuration

    Returns:
        Tuple of (is_valid, error_message)
    """
    for key in ["enumeration_cap", "hyperdet_cap", "torus_cap", "max_doublings", "log_precision", "workers"]:
        value = getattr(cfg, key)
        if not isinstance(value, int) or value <= 0:
            return False, f"Invalid {key}: {value}. Must be a positive integer"

    for key in ["steps", "burnin", "samples", "chains"]:
        value = getattr(cfg, key)
        if not isinstance(value, int) or value < 0:
            return False, f"Invalid {key}: {value}. Must be a non-negative integer"

    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        return False, f"Invalid seed: {cfg.seed}. Must be a 64-bit unsigned integer"

    if cfg.max_doublings > 40:
        return False, f"max_doublings too high: {cfg.max_doublings}. Maximum is 40"

    return True, ""
