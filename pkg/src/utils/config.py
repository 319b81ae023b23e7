"""
Configuration management utilities
"""

import os
import yaml
from typing import Any, Optional
from pathlib import Path


class Config:
    """Configuration manager for the DNLS diffusion toolkit."""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration.

        Args:
            config_path: Path to config.yaml file. Defaults to config.yaml in project root.
        """
        if config_path is None:
            config_path = Path(__file__).parent.parent.parent / "config.yaml"

        self.config_path = config_path
        self._config = self._load_config()

    def _load_config(self) -> dict:
        """Load configuration from YAML file."""
        try:
            with open(self.config_path, 'r') as f:
                loaded = yaml.safe_load(f)
        except FileNotFoundError:
            return self._get_default_config()
        except Exception as e:
            raise Exception(f"Error loading config: {str(e)}")
        return loaded or self._get_default_config()

    def _get_default_config(self) -> dict:
        """Return default configuration."""
        return {
            'lattice': {
                'N': 3,
                'omega': 0.0,
                'resonant_omega': 10.0
            },
            'integrator': {
                'method': 'DOP853',
                'tol': 1e-11,
                'symmetry_abort': 1e-9
            },
            'spectrum': {
                'r_min': 0.2,
                'r_max': 5.0,
                'radial_seeds': 64,
                'angular_seeds': 64,
                'newton_tol': 1e-10,
                'dedupe_tol': 1e-9,
                'simple_threshold': 1e-8,
                'fd_step': 1e-6
            },
            'melnikov': {
                'branch': 1,
                'tail_level': 1e-14,
                'epsabs': 1e-11,
                'epsrel': 1e-12,
                'quadrature': 'gk21'
            },
            'chain': {
                'margin': 0.1,
                'alpha_factor': 10.0,
                'max_denominator': 64,
                'rational_distance': 1e-6,
                'max_levels': 2000
            },
            'verify': {
                'amplitude': 6.0,
                'checks': []
            },
            'runtime': {
                'threads': 4,
                'seed': 20240611
            },
            'output': {
                'directory': 'results',
                'precision': 17
            },
            'logging': {
                'level': 'INFO',
                'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                'file': 'dnls_diffusion.log'
            }
        }

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value using dot notation.

        Args:
            key: Configuration key in dot notation (e.g., 'integrator.tol')
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        keys = key.split('.')
        value = self._config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def get_thread_count(self) -> int:
        """Worker count for sweeps, with the DNLS_THREADS environment override."""
        override = os.getenv('DNLS_THREADS')
        if override:
            try:
                return max(1, int(override))
            except ValueError:
                pass
        return max(1, int(self.get('runtime.threads', 4)))

    def get_section(self, name: str) -> dict:
        """Return a copy of a whole configuration section (empty if absent)."""
        section = self.get(name, {})
        return dict(section) if isinstance(section, dict) else {}
