"""
DNLS Diffusion - Main Entry Point
Runs lattice simulations, spectral scans, homoclinic tables, Melnikov sweeps,
transition chains and the invariant suite, writing CSV/JSON artifacts.
"""

import sys
from typing import Any, Callable, Dict, Optional

import click
import numpy as np
from dotenv import load_dotenv

from src.analyzers.invariant_suite import InvariantSuite, without_timing
from src.darboux.homoclinic import HomoclinicParams, homoclinic_orbit, homoclinic_residual
from src.integrators.evolve import drift_monitor, evolve, trajectory_rows
from src.isospectral.spectrum import AnnulusSearch, find_critical_points, spectrum_grid
from src.lattice.core import LatticeState
from src.melnikov.chain import build_chain
from src.melnikov.integrals import CSV_COLUMNS, solvability_flags, sweep_curves, truncation_time
from src.perturbations import PERTURBATION_MODES
from src.reporters.artifact_writer import ArtifactWriter
from src.utils.config import Config
from src.utils.errors import DNLSError, ParameterError
from src.utils.logger import get_logger, setup_logger
from src.utils.run_config import RunConfig

# Load .env for local overrides such as DNLS_THREADS
load_dotenv()

logger = get_logger()

DRIFT_POINTS = np.array([1.2 + 0.3j, 0.7 - 0.5j, -1.5 + 0.1j])

Handler = Callable[[RunConfig, Config, ArtifactWriter], Dict[str, Any]]


def initial_state(rc: RunConfig) -> LatticeState:
    """Plane wave of amplitude a plus seeded even noise of size `noise`."""
    if rc.noise == 0:
        return LatticeState.plane_wave(rc.N, rc.a)
    return LatticeState.random_even(rc.N, np.random.default_rng(rc.seed), scale=rc.noise, center=rc.a)


def melnikov_options(rc: RunConfig, config: Config) -> Dict[str, Any]:
    return {
        'T': rc.T,
        'quadrature': config.get('melnikov.quadrature', 'gk21'),
        'epsabs': float(config.get('melnikov.epsabs', 1e-11)),
        'epsrel': float(config.get('melnikov.epsrel', 1e-12)),
        'tail_level': float(config.get('melnikov.tail_level', 1e-14)),
        'branch': rc.branch,
    }


def run_simulate(rc: RunConfig, config: Config, writer: ArtifactWriter) -> Dict[str, Any]:
    params = rc.lattice_params()
    state = initial_state(rc)
    traj = evolve(state, 0.0, rc.t1, params, rc.perturbation(), tol=rc.tol,
                  sample_times=np.linspace(0.0, rc.t1, rc.samples), method=rc.method,
                  symmetry_abort=float(config.get('integrator.symmetry_abort', 1e-9)))
    reports = [drift_monitor(traj, q) for q in ('H0', 'I', 'D')]
    reports.append(drift_monitor(traj, 'Delta', z=DRIFT_POINTS))
    for r in reports:
        logger.info(f"Drift of {r.quantity}: {r.max_abs_drift:.3e} at t={r.at_time:.4g}")

    header, rows = trajectory_rows(traj)
    writer.write_csv('trajectory.csv', header, rows)
    writer.write_csv('drift.csv', ['quantity', 'max_abs_drift', 'at_time'],
                     [[r.quantity, r.max_abs_drift, r.at_time] for r in reports])
    return {'integrator': traj.stats}


def run_spectrum(rc: RunConfig, config: Config, writer: ArtifactWriter) -> Dict[str, Any]:
    params = rc.lattice_params()
    state = initial_state(rc)
    axis = np.linspace(-rc.radius, rc.radius, rc.grid)
    header, rows = spectrum_grid(state, params, axis, axis)
    scans = find_critical_points(
        state, params, AnnulusSearch.from_config(config),
        accept_tol=float(config.get('spectrum.newton_tol', 1e-10)),
        dedupe_tol=float(config.get('spectrum.dedupe_tol', 1e-9)),
        simple_threshold=float(config.get('spectrum.simple_threshold', 1e-8))
    )
    logger.info(f"Found {len(scans)} critical points")

    writer.write_csv('spectrum.csv', header, rows)
    crit_header = ['re_z', 'im_z', 're_delta', 'im_delta', 'abs_ddelta', 'abs_d2delta', 'is_critical', 'is_simple']
    crit_rows = [[s.to_dict()[k] for k in crit_header] for s in scans]
    writer.write_csv('critical_points.csv', crit_header, crit_rows)
    return {'critical_points': len(scans)}


def run_homoclinic(rc: RunConfig, config: Config, writer: ArtifactWriter) -> Dict[str, Any]:
    hp = HomoclinicParams(rc.a, rc.lattice_params(), gamma=rc.gamma, p=rc.p, branch=rc.branch)
    mu = hp.constants.mu
    T = rc.T if rc.T is not None else truncation_time(mu, float(config.get('melnikov.tail_level', 1e-14)))
    # the orbit is centred at t = -p/mu
    times = np.linspace(-T, T, rc.points) - hp.p / mu
    rows = []
    for t in times:
        q = homoclinic_orbit(hp, t).q
        residual = homoclinic_residual(hp, t)
        rows.extend([float(t), n, float(q[n].real), float(q[n].imag), residual] for n in range(rc.N))
    writer.write_csv('homoclinic.csv', ['t', 'n', 're_Q', 'im_Q', 'residual'], rows)
    return {'homoclinic': hp.to_dict()}


def run_melnikov(rc: RunConfig, config: Config, writer: ArtifactWriter) -> Dict[str, Any]:
    params = rc.lattice_params()
    grid = np.linspace(rc.a_min, rc.a_max, rc.points)
    results = sweep_curves(rc.mode, grid, params, threads=config.get_thread_count(),
                           **melnikov_options(rc, config))
    flags = solvability_flags(results)
    unsolvable = [f['a'] for f in flags if not f['solvable']]
    if unsolvable:
        logger.warning(f"{len(unsolvable)} grid points where the intersection equations may not be solvable")

    writer.write_csv('melnikov.csv', CSV_COLUMNS, [r.as_row() for r in results])
    writer.write_json('melnikov_flags.json', {'mode': rc.mode, 'flags': flags})
    return {'max_error_estimate': max(r.error_estimate for r in results)}


def run_chain(rc: RunConfig, config: Config, writer: ArtifactWriter) -> Dict[str, Any]:
    chain = build_chain(
        rc.mode, rc.A1, rc.A2, rc.epsilon, rc.lattice_params(),
        alpha=rc.chain_alpha, coordinate=rc.coordinate,
        margin=float(config.get('chain.margin', 0.1)),
        max_denominator=int(config.get('chain.max_denominator', 64)),
        rational_distance=float(config.get('chain.rational_distance', 1e-6)),
        alpha_factor=float(config.get('chain.alpha_factor', 10.0)),
        max_levels=int(config.get('chain.max_levels', 2000)),
        melnikov_kwargs=melnikov_options(rc, config),
        start_branch=rc.start_branch
    )
    logger.info(f"Chain with {len(chain.levels)} levels and {chain.n_links} links, "
                f"max residual {chain.max_residual():.3e}")
    writer.write_json('chain.json', chain.to_dict())
    return {'links': chain.n_links}


def run_verify(rc: RunConfig, config: Config, writer: ArtifactWriter) -> Dict[str, Any]:
    results = InvariantSuite(config, seed=rc.seed).run()
    click.echo(ArtifactWriter.format_check_table(results, color=sys.stdout.isatty()))
    writer.write_json('verify.json', without_timing(results))
    failed = results['statistics']['failed']
    return {'status': 1 if failed else 0, 'failed_checks': results['statistics']['failed_checks']}


HANDLERS: Dict[str, Handler] = {
    'simulate': run_simulate,
    'spectrum': run_spectrum,
    'homoclinic': run_homoclinic,
    'melnikov': run_melnikov,
    'chain': run_chain,
    'verify': run_verify,
}


def run(rc: RunConfig, config: Optional[Config] = None) -> int:
    """
    Execute one subcommand and write its artifacts plus manifest.json.

    Returns:
        0 on success, 1 on a numerical failure or failed check, 2 on invalid parameters
    """
    config = config or Config()
    writer = ArtifactWriter(rc.output, int(config.get('output.precision', 17)))

    logger.info("=" * 80)
    logger.info(f"DNLS Diffusion: {rc.subcommand}")
    logger.info("=" * 80)

    try:
        extra = HANDLERS[rc.subcommand](rc, config, writer) or {}
        status = int(extra.pop('status', 0))
        writer.write_manifest(rc.to_dict(), extra)
    except ParameterError as e:
        logger.error(f"Invalid parameters for {rc.subcommand}: {e}")
        return 2
    except DNLSError as e:
        logger.error(f"Numerical failure in {rc.subcommand}: {e}", exc_info=True)
        return 1
    except Exception as e:
        logger.error(f"Error during {rc.subcommand}: {str(e)}", exc_info=True)
        return 1

    logger.info(f"{rc.subcommand} finished with status {status}; artifacts in {rc.output}")
    return status


def _dispatch(ctx: click.Context, subcommand: str, **flags) -> None:
    config = Config()
    setup_logger(config)
    try:
        file_values = RunConfig.load_file(ctx.obj.get('config_file'))
        rc = RunConfig.build(subcommand, config, file_values, dict(flags, output=ctx.obj.get('output')))
    except ParameterError as e:
        raise click.UsageError(str(e), ctx=ctx)
    ctx.exit(run(rc, config))


lattice_options = [
    click.option('--N', 'N', type=int, default=None, help='Number of lattice sites (>= 3)'),
    click.option('--omega', type=float, default=None, help='Detuning omega'),
]


def with_options(options):
    def decorator(f):
        for option in reversed(options):
            f = option(f)
        return f
    return decorator


@click.group()
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Flat YAML run-config file; flags override its values')
@click.option('--output', type=click.Path(file_okay=False), default=None, help='Output directory')
@click.pass_context
def cli(ctx, config_file, output):
    """DNLS lattice integrable structure and Melnikov diffusion tools."""
    ctx.ensure_object(dict)
    ctx.obj['config_file'] = config_file
    ctx.obj['output'] = output


@cli.command()
@with_options(lattice_options)
@click.option('--a', type=float, default=None, help='Plane-wave amplitude of the initial state')
@click.option('--noise', type=float, default=None, help='Size of the seeded even perturbation')
@click.option('--t1', type=float, default=None, help='Final time')
@click.option('--samples', type=int, default=None, help='Number of output samples')
@click.option('--mode', type=click.Choice(PERTURBATION_MODES), default=None, help='Perturbation')
@click.option('--epsilon', type=float, default=None)
@click.option('--alpha', type=float, default=None)
@click.option('--tol', type=float, default=None, help='Integrator rtol = atol')
@click.option('--method', type=click.Choice(['DOP853', 'RK45']), default=None)
@click.option('--seed', type=int, default=None)
@click.pass_context
def simulate(ctx, **flags):
    """Integrate the lattice and report conservation drift."""
    _dispatch(ctx, 'simulate', **flags)


@cli.command()
@with_options(lattice_options)
@click.option('--a', type=float, default=None)
@click.option('--noise', type=float, default=None)
@click.option('--grid', type=int, default=None, help='Points per axis of the z-grid')
@click.option('--radius', type=float, default=None, help='Half-width of the z-grid')
@click.option('--seed', type=int, default=None)
@click.pass_context
def spectrum(ctx, **flags):
    """Tabulate the Floquet discriminant and its critical points."""
    _dispatch(ctx, 'spectrum', **flags)


@cli.command()
@with_options(lattice_options)
@click.option('--a', type=float, default=None)
@click.option('--gamma', type=float, default=None, help='Phase of the base plane wave')
@click.option('--p', type=float, default=None, help='Fiber parameter')
@click.option('--branch', type=int, default=None, help='+1 or -1')
@click.option('--points', type=int, default=None, help='Number of sample times')
@click.option('--T', 'T', type=float, default=None, help='Half-width of the time window')
@click.pass_context
def homoclinic(ctx, **flags):
    """Tabulate the homoclinic orbit and its ODE residual."""
    _dispatch(ctx, 'homoclinic', **flags)


@cli.command()
@with_options(lattice_options)
@click.option('--mode', type=click.Choice(['nonresonant', 'resonant']), default=None)
@click.option('--a-min', type=float, default=None)
@click.option('--a-max', type=float, default=None)
@click.option('--points', type=int, default=None)
@click.option('--branch', type=int, default=None)
@click.option('--T', 'T', type=float, default=None, help='Quadrature truncation time')
@click.pass_context
def melnikov(ctx, **flags):
    """Sweep the Melnikov integrals M1..M6 over an amplitude grid."""
    _dispatch(ctx, 'melnikov', **flags)


@cli.command()
@with_options(lattice_options)
@click.option('--mode', type=click.Choice(['nonresonant', 'resonant']), default=None)
@click.option('--A1', 'A1', type=float, default=None, help='Start of the chain')
@click.option('--A2', 'A2', type=float, default=None, help='End of the chain')
@click.option('--epsilon', type=float, default=None)
@click.option('--alpha', 'chain_alpha', type=float, default=None, help='Coupling (default a multiple of its minimum)')
@click.option('--coordinate', type=click.Choice(['level', 'amplitude']), default=None)
@click.option('--start-branch', type=int, default=None, help='-1 puts a resonant A1 level below omega')
@click.pass_context
def chain(ctx, **flags):
    """Build a transition chain between two tori."""
    _dispatch(ctx, 'chain', **flags)


@cli.command()
@click.option('--seed', type=int, default=None)
@click.pass_context
def verify(ctx, **flags):
    """Run the invariant suite."""
    _dispatch(ctx, 'verify', **flags)


if __name__ == "__main__":
    cli(obj={})
