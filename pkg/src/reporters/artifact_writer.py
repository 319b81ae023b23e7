"""
Artifact writer for CSV/JSON results and the run manifest
"""

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from colorama import Fore, Style

from .. import __version__
from ..utils.logger import get_logger

logger = get_logger()


def _jsonable(value: Any) -> Any:
    """Convert numpy and complex values to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': float(value.real), 'im': float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class ArtifactWriter:
    """Writes every artifact of a run into one output directory."""

    def __init__(self, output_dir: str, precision: int = 17):
        """
        Initialize artifact writer.

        Args:
            output_dir: Directory receiving the files (created if missing)
            precision: Significant digits for floating point CSV cells
        """
        self.output_dir = Path(output_dir)
        self.precision = int(precision)
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def _format(self, value: Any) -> str:
        if isinstance(value, (bool, np.bool_)):
            return str(bool(value))
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return f"{float(value):.{self.precision}g}"
        return '' if value is None else str(value)

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """
        Write a CSV file with a header row.

        Args:
            name: File name inside the output directory
            header: Column names
            rows: Row values; floats use the configured significant digits

        Returns:
            Path of the written file
        """
        path = self._path(name)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(list(header))
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"{name}: row has {len(row)} cells, header has {len(header)}")
                writer.writerow([self._format(v) for v in row])
        self.written.append(path)
        logger.info(f"Wrote {len(rows)} rows to {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        """Write a JSON document with sorted keys."""
        path = self._path(name)
        with open(path, 'w') as f:
            json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
            f.write('\n')
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path

    @staticmethod
    def sha256(path: Path) -> str:
        digest = hashlib.sha256()
        with open(path, 'rb') as f:
            for chunk in iter(lambda: f.read(65536), b''):
                digest.update(chunk)
        return digest.hexdigest()

    def write_manifest(self, run_config: Dict[str, Any], extra: Optional[Dict[str, Any]] = None) -> Path:
        """
        Write manifest.json with the run configuration, code version and the
        SHA-256 of every artifact written so far.
        """
        artifacts = {p.name: self.sha256(p) for p in self.written if p.name != 'manifest.json'}
        manifest = {
            'code_version': __version__,
            'run_config': run_config,
            'artifacts': artifacts
        }
        if extra:
            manifest.update(extra)
        return self.write_json('manifest.json', manifest)

    @staticmethod
    def format_check_table(results: Dict[str, Any], color: bool = True) -> str:
        """
        Format invariant-suite results as a pass/fail table.

        Args:
            results: Output of InvariantSuite.run
            color: Colour PASS/FAIL markers

        Returns:
            Table text
        """
        checks = results.get('checks', [])
        width = max([len(c['name']) for c in checks] + [5])
        lines = [f"{'check':<{width}}  status  {'value':>12}  {'threshold':>10}  detail",
                 '-' * (width + 50)]
        for c in checks:
            status = 'PASS' if c['passed'] else 'FAIL'
            if color:
                status = (Fore.GREEN if c['passed'] else Fore.RED) + status + Style.RESET_ALL
            lines.append(f"{c['name']:<{width}}  {status}    {c['value']:>12.3e}  {c['threshold']:>10.1e}  "
                         f"{c.get('detail', '')}")
        stats = results.get('statistics', {})
        lines.append('-' * (width + 50))
        lines.append(f"Total: {stats.get('passed', 0)}/{stats.get('total', 0)} checks passed "
                     f"in {stats.get('elapsed', 0.0):.1f}s")
        return '\n'.join(lines)
