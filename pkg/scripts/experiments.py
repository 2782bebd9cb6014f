import os
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from models.flow.suspension import FlowPoint, SuspensionFlow
from models.pcf.matching import (
    PlantedConjugacy,
    conjugacy_invariance_check,
    find_independent_pairs,
    matching_kernel_dimension,
    random_pairs,
    reconstruct_conjugacy_patch,
)
from models.pcf.temporal_distance import (
    antisymmetry_defect,
    sample_frame,
    sample_quadrilaterals,
    sample_temporal_distances,
)
from models.perturb.holonomy import (
    claim44_check,
    claim44_frame,
    default_gradient_grid,
    grassmannian_sweep,
    holonomy_derivative,
    remainder_exponent,
    returning_sequence,
)
from models.perturb.section import Bump, HeteroclinicDatum, SectionChart
from models.regularity.bunching import bunching_frame, bunching_report, sampled_bunching_sup
from models.roof.livshits import obstruction_frame, periodic_obstructions, solve_coboundary
from models.spectral.catalog import catalog_frame, enumerate_catalog
from models.spectral.conditions import invariant_unstable_subspaces
from models.spectral.spectrum import spectral_data
from scripts.config import ExperimentConfig
from scripts.logging_config import logger
from utils.errors import AnosovLabError, ConfigInvalid, DegenerateGradients, ExperimentFailed, ObstructionNonzero, \
    ResidualBelowNoise
from utils.helper import append_run_record, file_sha256, save_csv, save_json, write_manifest


def _flow(config: ExperimentConfig) -> SuspensionFlow:
    return SuspensionFlow.build(config.build_matrix(), config.build_roof(), config.build_translation())


def run_catalog(config: ExperimentConfig) -> List[str]:
    p = config.params
    entries = enumerate_catalog(p['d'], p['coeff_bound'], workers=config.workers)
    return [save_csv(catalog_frame(entries), os.path.join(config.out_dir, 'catalog.csv'))]


def run_livshits(config: ExperimentConfig) -> List[str]:
    p = config.params
    matrix, roof = config.build_matrix(), config.build_roof()
    report = periodic_obstructions(roof, matrix, p['n_max'])
    summary = {'n_max': p['n_max'], 'spread': report.spread, 'constant_equivalent': report.spread <= p['tol']}
    try:
        solution = solve_coboundary(roof, matrix, p['trunc'], tol=p['tol'], n_max=p['n_max'])
        summary['coboundary'] = {'constant_c': solution.constant_c, 'residual_sup': solution.residual_sup,
                                 'trunc': solution.trunc, 'transfer_u': solution.transfer_u.to_json_dict()}
    except ObstructionNonzero as e:
        logger.info(f"No coboundary solution: {e}")
        summary['coboundary'] = None
    return [save_csv(obstruction_frame(report), os.path.join(config.out_dir, 'obstructions.csv')),
            save_json(summary, os.path.join(config.out_dir, 'livshits.json'))]


def run_pcf(config: ExperimentConfig) -> List[str]:
    p = config.params
    flow = _flow(config)
    quads = sample_quadrilaterals(flow, p['count'], config.seed, radius=p['radius'])
    samples = sample_temporal_distances(flow, quads, tol=p['tol'])
    summary = {
        'count': len(samples),
        'max_abs_value': max((abs(s.value_series) for s in samples), default=0.0),
        'max_discrepancy': max((s.discrepancy for s in samples), default=0.0),
        'max_antisymmetry_defect': antisymmetry_defect(flow, quads),
    }
    return [save_csv(sample_frame(samples, flow.dim), os.path.join(config.out_dir, 'pcf_samples.csv')),
            save_json(summary, os.path.join(config.out_dir, 'pcf.json'))]


def run_subbundle(config: ExperimentConfig) -> List[str]:
    p = config.params
    flow = _flow(config)
    rng = np.random.default_rng(config.seed)
    base_point = FlowPoint.make(rng.random(flow.dim), 0.0)
    try:
        pairs = find_independent_pairs(flow, base_point, config.seed, budget=p['budget'], radius=p['radius'])
    except DegenerateGradients as e:
        logger.warning(f"{e}; measuring the kernel on unscreened pairs")
        pairs = random_pairs(flow, base_point, flow.spectral.unstable_dim, config.seed, radius=p['radius'])
    kernel = matching_kernel_dimension(flow, base_point, pairs)
    summary = {'base_point': base_point.coords.tolist(), 'kernel_dim': kernel.kernel_dim, 'rank': kernel.rank,
               'gradients': [g.tolist() for g in kernel.gradients], 'reconstruction': None}
    files = []
    if p['conjugacy_translation'] is not None and kernel.kernel_dim == 0:
        conjugacy = PlantedConjugacy.make(p['conjugacy_translation'], p['time_shift'])
        image = conjugacy.pushforward(flow)
        patch = reconstruct_conjugacy_patch(flow, image, conjugacy, base_point, pairs,
                                            grid_size=p['grid_size'], patch_radius=p['patch_radius'])
        invariance = conjugacy_invariance_check(
            flow, image, conjugacy, sample_quadrilaterals(flow, p['invariance_samples'], config.seed + 1))
        summary['reconstruction'] = {'sup_error': patch.sup_error, 'invariance': invariance}
        k = patch.grid.shape[1]
        frame = pd.DataFrame(np.hstack([patch.grid, patch.recovered]),
                             columns=[f"w{i + 1}" for i in range(k)] + [f"recovered{i + 1}" for i in range(k)])
        files.append(save_csv(frame, os.path.join(config.out_dir, 'patch.csv')))
    files.append(save_json(summary, os.path.join(config.out_dir, 'subbundle.json')))
    return files


def _chart_and_datum(config: ExperimentConfig):
    chart = SectionChart(_flow(config))
    return chart, HeteroclinicDatum.find(chart, max_period=config.params['max_period'])


def run_claim44(config: ExperimentConfig) -> List[str]:
    p = config.params
    chart, datum = _chart_and_datum(config)
    bump = Bump.standard(chart, datum, direction=p['direction'], amplitude=p['amplitude'])
    report = claim44_check(chart, datum, bump, p['steps'])
    try:
        exponent = remainder_exponent(chart, datum, bump, returning_sequence(chart, datum, bump, p['norms']))
    except ResidualBelowNoise as e:
        logger.warning(str(e))
        exponent = None
    summary = report.to_json_dict()
    summary.update({'y_r': datum.y_r, 'remainder_exponent': exponent,
                    'holonomy_derivative': holonomy_derivative(chart, datum, bump).tolist()})
    return [save_csv(claim44_frame(report), os.path.join(config.out_dir, 'claim44_residuals.csv')),
            save_json(summary, os.path.join(config.out_dir, 'claim44.json'))]


def run_sweep(config: ExperimentConfig) -> List[str]:
    p = config.params
    chart, datum = _chart_and_datum(config)
    subspaces = invariant_unstable_subspaces(chart.flow.spectral)
    if not subspaces.finite:
        raise ExperimentFailed(f"Sweep needs finitely many invariant subspaces: {subspaces.cause_of_infinitude}")
    grid = default_gradient_grid(chart.unstable_dim, p['directions'], p['amplitudes'], seed=config.seed)
    report = grassmannian_sweep(chart, datum, grid, subspaces)
    return [save_json(report.to_json_dict(), os.path.join(config.out_dir, 'sweep.json'))]


def run_bunching(config: ExperimentConfig) -> List[str]:
    p = config.params
    spectral = spectral_data(config.build_matrix())
    tau = config.build_roof().mean
    reports = [bunching_report(spectral, tau, m * tau, p['nu_grid']) for m in p['returns']]
    stable = sampled_bunching_sup(spectral, p['sample_steps'], 1.0, samples=p['samples'], seed=config.seed)
    weak = sampled_bunching_sup(spectral, p['sample_steps'], 1.0, weak=True, samples=p['samples'], seed=config.seed)
    summary = {
        'roof_mean': tau,
        'reports': [{'t': r.t, 'stable_sup': r.stable_sup, 'weak_stable_sup': r.weak_stable_sup,
                     'nu_max_stable': r.nu_max_stable, 'nu_max_weak': r.nu_max_weak,
                     'volume_defect': r.volume_defect} for r in reports],
        'sampled': {'steps': p['sample_steps'], 'stable_rate_ratio': stable.rate_ratio,
                    'weak_rate_ratio': weak.rate_ratio},
    }
    return [save_csv(bunching_frame(reports), os.path.join(config.out_dir, 'bunching.csv')),
            save_json(summary, os.path.join(config.out_dir, 'bunching.json'))]


RUNNERS: Dict[str, Callable[[ExperimentConfig], List[str]]] = {
    'catalog': run_catalog,
    'livshits': run_livshits,
    'pcf': run_pcf,
    'subbundle': run_subbundle,
    'claim44': run_claim44,
    'sweep': run_sweep,
    'bunching': run_bunching,
}


def run_experiment(config: ExperimentConfig) -> List[str]:
    """
    Runs one experiment, writes its reports plus manifest.json into config.out_dir and
    appends the run to runs.jsonl there.

    Args:
        config (ExperimentConfig): Validated config.

    Returns:
        List[str]: Written report paths, manifest last.

    Raises:
        ConfigInvalid: Propagated unchanged.
        ExperimentFailed: Any other library error, with the original as cause.
    """
    try:
        files = RUNNERS[config.kind](config)
    except (ConfigInvalid, ExperimentFailed):
        raise
    except (AnosovLabError, ValueError) as e:
        logger.error(f"Error running {config.kind}: {type(e).__name__}: {e}")
        raise ExperimentFailed(f"{config.kind} failed with {type(e).__name__}: {e}") from e
    manifest = write_manifest(config.out_dir, config.hash, config.seed, files)
    append_run_record(config.out_dir, {'kind': config.kind, 'config_hash': config.hash, 'seed': config.seed,
                                       'manifest': file_sha256(manifest)})
    logger.info(f"{config.kind} wrote {len(files)} reports to {config.out_dir}")
    return files + [manifest]
