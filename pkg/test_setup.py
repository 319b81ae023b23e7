"""
Smoke tests for the DNLS diffusion toolkit
Checks imports, configuration, logging and the thread override before longer runs.
"""

import os
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))


def test_imports():
    """Test that all imports work correctly."""
    print("Testing imports...")
    from src.utils.config import Config
    from src.utils.logger import setup_logger
    from src.utils.run_config import RunConfig
    from src.lattice.core import LatticeParams, LatticeState
    from src.integrators.evolve import evolve
    from src.isospectral.lax import discriminant
    from src.darboux.homoclinic import homoclinic_orbit
    from src.melnikov.integrals import compute_M
    from src.melnikov.chain import build_chain
    from src.analyzers.invariant_suite import InvariantSuite
    from src.reporters.artifact_writer import ArtifactWriter
    print("✓ All imports successful")


def test_config():
    """Test configuration loading."""
    print("\nTesting configuration...")
    from src.utils.config import Config
    config = Config()

    assert config.get('lattice.N') == 3
    assert float(config.get('integrator.tol')) == 1e-11
    assert config.get('melnikov.quadrature') == 'gk21'
    assert config.get('missing.key', 'fallback') == 'fallback'
    assert config.get_section('chain')['max_denominator'] == 64

    print("✓ Configuration loaded successfully")
    print(f"  - Lattice sites: {config.get('lattice.N')}")
    print(f"  - Integrator: {config.get('integrator.method')} at tol {config.get('integrator.tol')}")


def test_default_config_matches_file(tmp_path):
    """The built-in defaults agree with config.yaml on the shared keys."""
    from src.utils.config import Config
    config = Config()
    defaults = Config(str(tmp_path / 'absent.yaml'))
    for key in ('lattice.N', 'lattice.resonant_omega', 'melnikov.tail_level', 'chain.margin', 'runtime.seed'):
        assert float(config.get(key)) == float(defaults.get(key))
    assert config.get('integrator.method') == defaults.get('integrator.method')


def test_logger():
    """Test logger setup."""
    print("\nTesting logger...")
    from src.utils.config import Config
    from src.utils.logger import get_logger, setup_logger

    config = Config()
    logger = setup_logger(config)

    logger.debug("Debug message")
    logger.info("Info message")
    assert get_logger() is logger
    assert logger.handlers
    assert any(getattr(h, 'stream', None) is sys.stderr for h in logger.handlers)

    # a second setup replaces the handlers instead of stacking them
    count = len(logger.handlers)
    setup_logger(config)
    assert len(logger.handlers) == count
    print("✓ Logger configured successfully")


def test_logger_without_file():
    """An empty logging.file keeps the output on stderr only."""
    import logging
    from src.utils.logger import setup_logger

    class NoFileConfig:
        def get(self, key, default=None):
            return '' if key == 'logging.file' else default

    logger = setup_logger(NoFileConfig())
    assert len(logger.handlers) == 1
    assert not any(isinstance(h, logging.FileHandler) for h in logger.handlers)


def test_thread_override(monkeypatch):
    """DNLS_THREADS overrides runtime.threads."""
    from src.utils.config import Config
    config = Config()
    monkeypatch.setenv('DNLS_THREADS', '2')
    assert config.get_thread_count() == 2
    monkeypatch.setenv('DNLS_THREADS', 'many')
    assert config.get_thread_count() == max(1, int(config.get('runtime.threads', 4)))
    monkeypatch.delenv('DNLS_THREADS')
    assert config.get_thread_count() >= 1


def run_all_tests():
    """Run all tests."""
    print("=" * 60)
    print("DNLS Diffusion - Setup Checks")
    print("=" * 60)

    tests = [
        ("Imports", test_imports),
        ("Configuration", test_config),
        ("Logger", test_logger),
        ("Logger without a file", test_logger_without_file),
    ]

    results = []
    for name, test_func in tests:
        try:
            test_func()
            results.append((name, True))
        except Exception as e:
            print(f"✗ {name} test failed: {e}")
            results.append((name, False))

    # Summary
    print("\n" + "=" * 60)
    print("Test Summary")
    print("=" * 60)

    passed = sum(1 for _, result in results if result)
    total = len(results)

    for name, result in results:
        status = "✓ PASS" if result else "✗ FAIL"
        print(f"{status}: {name}")

    print(f"\nTotal: {passed}/{total} tests passed")
    if os.getenv('DNLS_THREADS'):
        print(f"  - DNLS_THREADS = {os.getenv('DNLS_THREADS')}")

    return passed == total


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
