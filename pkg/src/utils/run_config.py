"""
Per-run configuration record for the command-line front end
"""

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .config import Config
from .errors import ParameterError
from ..lattice.core import LatticeParams
from ..perturbations import PERTURBATION_MODES, PerturbationSpec

SUBCOMMANDS = ('simulate', 'spectrum', 'homoclinic', 'melnikov', 'chain', 'verify')
INT_FIELDS = ('N', 'branch', 'start_branch', 'samples', 'grid', 'points', 'seed')
FLOAT_FIELDS = ('omega', 'epsilon', 'alpha', 'a', 'gamma', 'p', 't1', 'tol', 'noise', 'radius',
                'a_min', 'a_max', 'T', 'A1', 'A2', 'chain_alpha')


def _coerce(name: str, value: Any) -> Any:
    """YAML 1.1 reads 1e-11 as a string; numeric fields are converted here."""
    if value is None:
        return None
    try:
        if name in INT_FIELDS:
            return int(value)
        if name in FLOAT_FIELDS:
            return float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be numeric, got {value!r}")
    return value


@dataclass
class RunConfig:
    """Flat, serializable settings of one CLI run."""

    subcommand: str
    N: int = 3
    omega: float = 0.0
    mode: str = 'none'
    epsilon: float = 0.0
    alpha: float = 0.0
    a: float = 6.0
    gamma: float = 0.0
    p: float = 0.0
    branch: int = 1
    t1: float = 10.0
    tol: float = 1e-11
    method: str = 'DOP853'
    samples: int = 101
    noise: float = 0.0
    grid: int = 41
    radius: float = 3.0
    points: int = 64
    a_min: float = 5.3
    a_max: float = 12.0
    T: Optional[float] = None
    A1: Optional[float] = None
    A2: Optional[float] = None
    chain_alpha: Optional[float] = None
    coordinate: str = 'amplitude'
    start_branch: int = 1
    output: str = 'results'
    seed: int = 20240611

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ParameterError(f"Unknown subcommand: {self.subcommand!r}")
        if self.mode not in PERTURBATION_MODES:
            raise ParameterError(f"Unknown mode: {self.mode!r}")
        if not (1e-14 < self.tol < 1e-3):
            raise ParameterError(f"tol must lie in (1e-14, 1e-3), got {self.tol!r}")
        for name in ('samples', 'grid', 'points'):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.t1 <= 0:
            raise ParameterError(f"t1 must be positive, got {self.t1!r}")
        if self.noise < 0 or self.radius <= 0:
            raise ParameterError("noise must be >= 0 and radius > 0")
        if self.a_min > self.a_max:
            raise ParameterError(f"a_min must not exceed a_max ({self.a_min}, {self.a_max})")
        if self.branch not in (1, -1) or self.start_branch not in (1, -1):
            raise ParameterError(f"branch and start_branch must be +1 or -1, got {self.branch!r}, {self.start_branch!r}")
        if self.coordinate not in ('level', 'amplitude'):
            raise ParameterError(f"Unknown coordinate: {self.coordinate!r}")
        if self.T is not None and self.T <= 0:
            raise ParameterError(f"T must be positive, got {self.T!r}")
        if self.subcommand in ('melnikov', 'chain') and self.mode not in ('nonresonant', 'resonant'):
            raise ParameterError(f"{self.subcommand} needs mode nonresonant or resonant, got {self.mode!r}")
        if self.subcommand == 'chain' and (self.A1 is None or self.A2 is None):
            raise ParameterError("chain needs both A1 and A2")
        # validates N and omega
        params = self.lattice_params()
        if self.subcommand in ('melnikov', 'chain') and self.mode == 'resonant':
            lower = params.amplitude_range()[0]
            if not self.omega > lower:
                raise ParameterError(f"resonant mode needs omega > {lower:.6g}, got {self.omega}")

    def lattice_params(self) -> LatticeParams:
        return LatticeParams(int(self.N), float(self.omega))

    def perturbation(self) -> PerturbationSpec:
        return PerturbationSpec(self.mode, self.epsilon, self.alpha)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'RunConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ParameterError(f"Unknown run-config keys: {unknown}")
        return cls(**{k: _coerce(k, v) for k, v in values.items()})

    @classmethod
    def defaults_from(cls, config: Config) -> Dict[str, Any]:
        """Defaults taken from config.yaml."""
        return {
            'N': config.get('lattice.N', 3),
            'omega': config.get('lattice.omega', 0.0),
            'tol': config.get('integrator.tol', 1e-11),
            'method': config.get('integrator.method', 'DOP853'),
            'output': config.get('output.directory', 'results'),
            'seed': config.get('runtime.seed', 20240611),
        }

    @classmethod
    def build(cls, subcommand: str, config: Config, file_values: Optional[Dict[str, Any]] = None,
              flags: Optional[Dict[str, Any]] = None) -> 'RunConfig':
        """config.yaml defaults, then the run-config file, then CLI flags."""
        values: Dict[str, Any] = cls.defaults_from(config)
        explicit = dict(file_values or {})
        explicit.update({k: v for k, v in (flags or {}).items() if v is not None})
        if explicit.get('mode') == 'resonant' and explicit.get('omega') is None:
            values['omega'] = config.get('lattice.resonant_omega', 10.0)
        values.update(explicit)
        values['subcommand'] = subcommand
        return cls.from_dict(values)

    def to_yaml(self, path: str) -> None:
        with open(path, 'w') as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True)

    @staticmethod
    def load_file(path: Optional[str]) -> Dict[str, Any]:
        """Read a flat key-value YAML run-config file."""
        if not path:
            return {}
        with open(Path(path), 'r') as f:
            loaded = yaml.safe_load(f) or {}
        if not isinstance(loaded, dict) or any(isinstance(v, (dict, list)) for v in loaded.values()):
            raise ParameterError(f"run-config file {path} must be a flat key-value mapping")
        return loaded

    @classmethod
    def from_yaml(cls, path: str) -> 'RunConfig':
        return cls.from_dict(cls.load_file(path))
