"""
Experimental protocol: build source and target material, run every requested strategy on operational sets of
each balance, score the detectors on a labeled evaluation set and write the reports.
"""
import os
import time
from contextlib import contextmanager
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from tada2go.harness.config import (ExperimentConfig, PoolConfig,
                                    catalog_pipelines, resolve_output_dir,
                                    write_resolved_config)
from tada2go.harness.helpers import load_target_images
from tada2go.harness.report import ReportRow, emit_panels, emit_report
from tada2go.toolkit.baselines.adaptation import coral_transform, subspace_align
from tada2go.toolkit.baselines.catalog import (LabeledSet, SourceCatalog,
                                               TargetBundle, build_all_mixture,
                                               build_catalog, develop_covers,
                                               feature_stack, labeled_set,
                                               parallel_map, train_on)
from tada2go.toolkit.baselines.selection import (fit_router, routed_predict,
                                                 select_closest_source)
from tada2go.toolkit.emulator.checkpoint import save_checkpoint, write_training_log
from tada2go.toolkit.emulator.training import TrainingState, train
from tada2go.toolkit.exceptions.exceptions import (OutputExistsException,
                                                   RankDeficiencyException,
                                                   StageFailureException)
from tada2go.toolkit.imagery.image import GrayImage, RawPool
from tada2go.toolkit.imagery.pipeline import find_pipeline
from tada2go.toolkit.imagery.synthesis import crop_pool, generate_synthetic_raw
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs, compress_hard
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger, run_record_handler
from tada2go.toolkit.steganalysis.detector import (balanced_accuracy, evaluate,
                                                   train_detector)
from tada2go.toolkit.stego.embedding import EmbeddingConfig, embed_pool
from tada2go.toolkit.utils.constants import CLOSEST_METRICS

CONFIG_FILE = 'config.json'
TIMINGS_FILE = 'timings.csv'
RUN_LOG_FILE = 'run_log.csv'
REPORT_JSON = 'report.json'

# Strategies whose result does not depend on the operational set
BALANCE_FREE = ('TgtOnly', 'SrcOnly', 'All', 'Multiclassifier')
CATALOG_STRATEGIES = ('All', 'Multiclassifier') + tuple(CLOSEST_METRICS)
SOURCE_STRATEGIES = ('SrcOnly', 'SubspaceAlignment', 'CORAL')


class TargetMaterial(NamedTuple):
    """
    Named tuple for the target images of one seed.

    Attributes:
        train (LabeledSet): Labeled target training pairs (TgtOnly only).
        evaluation (LabeledSet): Labeled evaluation pairs (harness scoring only).
        operational_covers (List[JpegCoeffs]): Covers the operational sets are drawn from.
        operational_stegos (List[JpegCoeffs]): Their stego versions.
    """
    train: LabeledSet
    evaluation: LabeledSet
    operational_covers: List[JpegCoeffs]
    operational_stegos: List[JpegCoeffs]


class StrategyResult(NamedTuple):
    accuracy: float
    selected_source: str = ''
    l_eval_init: Optional[float] = None
    l_eval_final: Optional[float] = None
    detail: str = ''


@contextmanager
def stage(name: str, timings: List[dict]):
    """
    Times a stage and turns any failure inside it into a StageFailureException naming the stage.
    """
    start = time.perf_counter()
    logger.info(f"Stage '{name}' started.")
    try:
        yield
    except StageFailureException:
        raise
    except Exception as err:
        logger.exception(f"Stage '{name}' failed.")
        raise StageFailureException(name, cause=err) from err
    finally:
        timings.append({'stage': name, 'seconds': round(time.perf_counter() - start, 3)})


def make_pool(pool: PoolConfig) -> RawPool:
    raws = generate_synthetic_raw(pool.count, pool.size, pool.noise_alpha, pool.noise_beta, pool.smoothness, pool.seed)
    return crop_pool(raws, pool.crop, pool.crop_mode) if pool.crop else raws


def target_id(config: ExperimentConfig, quant: QuantTable) -> str:
    if config.target.directory is not None:
        return f"{os.path.basename(os.path.normpath(config.target.directory))}@{quant.identifier}"
    return f"{config.target.pipeline}@{quant.identifier}"


def operational_set(material: TargetMaterial, balance: str, size: int) -> List[JpegCoeffs]:
    """
    Operational images of a balance: all covers, all stegos, or covers then stegos half and half.
    """
    covers = material.operational_covers[:size]
    stegos = material.operational_stegos[:size]
    if balance == 'full-cover':
        return list(covers)
    if balance == 'full-stego':
        return list(stegos)
    half = (len(covers) + 1) // 2
    return list(covers[:half]) + list(stegos[half:])


def split_target(covers: List[JpegCoeffs], config: ExperimentConfig, embedding: EmbeddingConfig) -> TargetMaterial:
    """Embeds the target covers and splits them into training, evaluation and operational parts."""
    stegos = embed_pool(covers, embedding)
    train_end = config.train_pairs
    eval_end = train_end + config.eval_pairs

    def part(start: int, end: int) -> LabeledSet:
        cover_part, stego_part = covers[start:end], stegos[start:end]
        return LabeledSet(cover_part, stego_part, feature_stack(cover_part, config.schema_id, config.workers),
                          feature_stack(stego_part, config.schema_id, config.workers), config.schema_id)

    return TargetMaterial(part(0, train_end), part(train_end, eval_end), covers[eval_end:], stegos[eval_end:])


def score(detector, evaluation: LabeledSet) -> float:
    return evaluate(detector, evaluation.cover_features, evaluation.stego_features)


def run_subspace_alignment(source: LabeledSet, operational: np.ndarray, evaluation: LabeledSet,
                           config: ExperimentConfig, seed: int) -> StrategyResult:
    """
    Subspace alignment with the dimension tuned on the evaluation accuracy (oracle), plus the fixed-d result.
    """
    source_features = np.vstack([source.cover_features, source.stego_features])
    bound = min(source_features.shape[0] - 1, operational.shape[0] - 1, source_features.shape[1])
    candidates = set(config.subspace_dims) | {config.subspace_fixed_dim}
    dims = sorted(d for d in candidates if d <= bound)
    if not dims:
        raise RankDeficiencyException(f"No subspace dimension fits the available rank {bound}.")

    accuracies = {}
    for d in dims:
        aligned = subspace_align(source_features, operational, d)
        detector = train_detector(aligned.project_source(source.cover_features),
                                  aligned.project_source(source.stego_features), reg=config.detector_reg, seed=seed)
        accuracies[d] = evaluate(detector, aligned.project_target(evaluation.cover_features),
                                 aligned.project_target(evaluation.stego_features))
    best = max(dims, key=lambda d: (accuracies[d], -d))
    fixed = accuracies.get(config.subspace_fixed_dim)
    fixed_text = f"{fixed:.6f}" if fixed is not None else 'n/a'
    grid = ';'.join(f"d{d}={accuracies[d]:.6f}" for d in dims)
    return StrategyResult(accuracies[best], 'SrcOnly',
                          detail=f"oracle d={best}; fixed d={config.subspace_fixed_dim} accuracy={fixed_text}; {grid}")


def run_coral(source: LabeledSet, operational: np.ndarray, evaluation: LabeledSet, config: ExperimentConfig,
              seed: int) -> StrategyResult:
    source_features = np.vstack([source.cover_features, source.stego_features])
    transformed = coral_transform(source_features, operational, config.coral_eta)
    count = source.cover_features.shape[0]
    detector = train_detector(transformed[:count], transformed[count:], reg=config.detector_reg, seed=seed)
    return StrategyResult(score(detector, evaluation), 'SrcOnly', detail=f"eta={config.coral_eta:g}")


def run_tada(source_pool: RawPool, bundle: TargetBundle, evaluation: LabeledSet, config: ExperimentConfig,
             embedding: EmbeddingConfig, seed: int, output_dir: str, balance: str) -> StrategyResult:
    """
    Learns the target development from the unlabeled operational set, develops the source pool with it and
    trains a detector on the emulated covers and their stegos.
    """
    hyper = config.training._replace(init_seed=seed, shuffle_seed=seed, workers=config.workers)
    state: TrainingState = train(source_pool, bundle.images, config.loss, hyper)
    stem = os.path.join(output_dir, 'tada', f"{balance}_seed{seed}")
    save_checkpoint(state, f"{stem}_kernel.json", bundle.quant_table.identifier)
    write_training_log(state, f"{stem}_training_log.csv")

    pipeline = state.best_kernel.as_pipeline(bundle.quant_table, f"tada-{balance}")
    labeled = labeled_set(develop_covers(list(source_pool), pipeline, config.workers), bundle.quant_table, embedding,
                          config.schema_id, config.workers)
    detector = train_on(labeled, config.detector_reg, seed)
    return StrategyResult(score(detector, evaluation), pipeline.identifier, state.initial_eval, state.best_eval,
                          f"epochs={state.epoch}; stop={state.stop_reason}")


def _prepare_output(config: ExperimentConfig) -> str:
    output_dir = resolve_output_dir(config)
    existing = os.path.isdir(output_dir) and any(name.startswith('report') for name in os.listdir(output_dir))
    if existing and not config.overwrite:
        raise OutputExistsException(output_dir)
    os.makedirs(output_dir, exist_ok=True)
    run_log = os.path.join(output_dir, RUN_LOG_FILE)
    if os.path.exists(run_log):
        os.remove(run_log)
    write_resolved_config(config, os.path.join(output_dir, CONFIG_FILE))
    return output_dir


def _target_covers(config: ExperimentConfig, quant: QuantTable, seed_cache: Dict[str, List[GrayImage]]) -> List[JpegCoeffs]:
    if config.target.directory is not None:
        covers = load_target_images(config.target.directory, quant)
        needed = config.train_pairs + config.eval_pairs + config.operational_size
        if len(covers) < needed:
            raise RankDeficiencyException(f"Target directory holds {len(covers)} images, {needed} are needed.")
        return covers
    return parallel_map(lambda image: compress_hard(image, quant), seed_cache['target'], config.workers)


def run_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """
    Runs the full protocol for every seed and balance.

    Stages: synthesize, then per seed target-sets, catalog, source-only, balance-free strategies and one stage
    per (balance, strategy), and finally the reports. Reports, the resolved configuration, timings and the run
    log are written to the output directory. Given the same configuration, reports are byte-identical.

    Args:
        config (ExperimentConfig): Validated configuration.

    Returns:
        List[ReportRow]: One row per (strategy, balance, seed).

    Raises:
        OutputExistsException: If the output directory holds reports and overwrite is off.
        StageFailureException: If a stage fails; rows gathered so far are still written.
    """
    output_dir = _prepare_output(config)
    timings: List[dict] = []
    rows: List[ReportRow] = []
    quant = QuantTable.from_config(config.target.quant_table)
    logger.info(f"Experiment '{config.name}' writing to '{output_dir}'.")
    try:
        with stage('synthesize', timings):
            pipelines = catalog_pipelines(config)
            source_pool = make_pool(config.source.pool)
            developed = {}
            if config.target.directory is None:
                target_pipeline = find_pipeline(pipelines, config.target.pipeline)
                developed['target'] = develop_covers(list(make_pool(config.target.pool)), target_pipeline, config.workers)
        target = target_id(config, quant)

        for seed in config.seeds:
            embedding = config.embedding._replace(seed=config.embedding.seed + seed)
            with stage(f'target-sets/seed{seed}', timings):
                material = split_target(_target_covers(config, quant, developed), config, embedding)

            catalog: Optional[SourceCatalog] = None
            if any(strategy in CATALOG_STRATEGIES for strategy in config.strategies):
                with stage(f'catalog/seed{seed}', timings):
                    catalog = build_catalog(source_pool, pipelines, quant, embedding, config.schema_id,
                                            config.detector_reg, seed, config.workers)
            source: Optional[LabeledSet] = None
            if any(strategy in SOURCE_STRATEGIES for strategy in config.strategies):
                with stage(f'source-only/seed{seed}', timings):
                    src_pipeline = find_pipeline(pipelines, config.source.pipeline)
                    source = labeled_set(develop_covers(list(source_pool), src_pipeline, config.workers), quant,
                                         embedding, config.schema_id, config.workers)

            fixed: Dict[str, StrategyResult] = {}
            for strategy in config.strategies:
                if strategy not in BALANCE_FREE:
                    continue
                with stage(f'{strategy}/seed{seed}', timings):
                    if strategy == 'TgtOnly':
                        fixed[strategy] = StrategyResult(score(train_on(material.train, config.detector_reg, seed),
                                                               material.evaluation), target)
                    elif strategy == 'SrcOnly':
                        fixed[strategy] = StrategyResult(score(train_on(source, config.detector_reg, seed),
                                                               material.evaluation), config.source.pipeline)
                    elif strategy == 'All':
                        mixture = build_all_mixture(catalog, quant)
                        fixed[strategy] = StrategyResult(score(train_on(mixture, config.detector_reg, seed),
                                                               material.evaluation), '+'.join(catalog.identifiers))
                    else:
                        fixed[strategy] = run_multiclassifier(catalog, material.evaluation)

            for balance in config.balances:
                bundle = TargetBundle(operational_set(material, balance, config.operational_size),
                                      identifier=f"{target}/{balance}", max_count=config.operational_size)
                for strategy in config.strategies:
                    if strategy in fixed:
                        result = fixed[strategy]
                    else:
                        with stage(f'{strategy}/{balance}/seed{seed}', timings):
                            result = run_adaptive(strategy, bundle, catalog, source, source_pool, material, config,
                                                  embedding, seed, output_dir, balance)
                    rows.append(ReportRow(strategy, target, balance, seed, result.accuracy, result.selected_source,
                                          result.l_eval_init, result.l_eval_final, result.detail))
                    logger.info(f"{strategy} on {target} ({balance}, seed {seed}): accuracy {result.accuracy:.4f}")
    finally:
        _write_outputs(rows, timings, output_dir)
    return rows


def run_multiclassifier(catalog: SourceCatalog, evaluation: LabeledSet) -> StrategyResult:
    """
    Routes each evaluation image to the detector of its predicted source.

    Routing is per tested image, so the operational set plays no part and the result is shared by all balances.
    The detail lists how many evaluation images went to each source.
    """
    router = fit_router(catalog)
    predictions = np.concatenate([routed_predict(catalog, router, evaluation.cover_features),
                                  routed_predict(catalog, router, evaluation.stego_features)])
    labels = np.concatenate([np.zeros(evaluation.cover_features.shape[0]),
                             np.ones(evaluation.stego_features.shape[0])])
    routes = np.bincount(router.predict(np.vstack([evaluation.cover_features, evaluation.stego_features])),
                         minlength=len(catalog))
    detail = ';'.join(f"{identifier}={count}" for identifier, count in zip(catalog.identifiers, routes))
    return StrategyResult(balanced_accuracy(predictions, labels), 'routed', detail=detail)


def run_adaptive(strategy: str, bundle: TargetBundle, catalog: Optional[SourceCatalog], source: Optional[LabeledSet],
                 source_pool: RawPool, material: TargetMaterial, config: ExperimentConfig, embedding: EmbeddingConfig,
                 seed: int, output_dir: str, balance: str) -> StrategyResult:
    """Runs one strategy that adapts to the unlabeled operational set."""
    evaluation = material.evaluation
    if strategy in CLOSEST_METRICS:
        selection = select_closest_source(catalog, bundle, CLOSEST_METRICS[strategy])
        values = ';'.join(f"{source_id}={value:.6g}" for source_id, value in
                          zip(selection.table['source'], selection.table['value']))
        return StrategyResult(score(catalog[selection.index].detector, evaluation), selection.identifier,
                              detail=values)
    operational = bundle.features(config.schema_id, config.workers)
    if strategy == 'SubspaceAlignment':
        return run_subspace_alignment(source, operational, evaluation, config, seed)
    if strategy == 'CORAL':
        return run_coral(source, operational, evaluation, config, seed)
    return run_tada(source_pool, bundle, evaluation, config, embedding, seed, output_dir, balance)


def _write_outputs(rows: List[ReportRow], timings: List[dict], output_dir: str) -> None:
    if rows:
        emit_panels(rows, output_dir, 'csv')
        emit_report(rows, os.path.join(output_dir, REPORT_JSON), 'json')
    pd.DataFrame(timings, columns=['stage', 'seconds']).to_csv(os.path.join(output_dir, TIMINGS_FILE), index=False)
    run_record_handler.write_queued_logs(os.path.join(output_dir, RUN_LOG_FILE))


def run_cross_matrix(config: ExperimentConfig, pipelines: Sequence[str] = ('S', '0.5S')) -> pd.DataFrame:
    """
    Source-only cross accuracies: a detector trained on each pipeline, scored on targets of each pipeline.

    Every pipeline develops the source pool for training and the target pool for evaluation, both compressed
    with the target table. Results for all seeds are written to cross_matrix.csv.

    Returns:
        pd.DataFrame: Columns seed, source, target, accuracy.
    """
    output_dir = resolve_output_dir(config)
    os.makedirs(output_dir, exist_ok=True)
    quant = QuantTable.from_config(config.target.quant_table)
    catalog = catalog_pipelines(config)
    timings: List[dict] = []
    records = []
    with stage('cross-matrix/synthesize', timings):
        source_pool = make_pool(config.source.pool)
        target_pool = list(make_pool(config.target.pool))[:config.eval_pairs]
        developed = {identifier: (develop_covers(list(source_pool), find_pipeline(catalog, identifier), config.workers),
                                  develop_covers(target_pool, find_pipeline(catalog, identifier), config.workers))
                     for identifier in pipelines}
    for seed in config.seeds:
        embedding = config.embedding._replace(seed=config.embedding.seed + seed)
        with stage(f'cross-matrix/seed{seed}', timings):
            evaluations = {identifier: labeled_set(developed[identifier][1], quant, embedding, config.schema_id,
                                                   config.workers) for identifier in pipelines}
            for source_id in pipelines:
                detector = train_on(labeled_set(developed[source_id][0], quant, embedding, config.schema_id,
                                                config.workers), config.detector_reg, seed)
                for evaluated in pipelines:
                    accuracy = score(detector, evaluations[evaluated])
                    records.append({'seed': seed, 'source': source_id, 'target': evaluated,
                                    'accuracy': round(accuracy, 6)})
    frame = pd.DataFrame(records, columns=['seed', 'source', 'target', 'accuracy'])
    frame.to_csv(os.path.join(output_dir, 'cross_matrix.csv'), index=False, float_format='%.6f')
    matrix = frame.pivot_table(index='source', columns='target', values='accuracy', aggfunc='mean', sort=False)
    logger.info(f"Cross-accuracy matrix (rows: training source, columns: target):\n{matrix.to_string()}")
    return frame


def diagonal_gap(frame: pd.DataFrame) -> float:
    """Mean diagonal minus mean off-diagonal accuracy of a cross matrix."""
    diagonal = frame['source'] == frame['target']
    return float(frame.loc[diagonal, 'accuracy'].mean() - frame.loc[~diagonal, 'accuracy'].mean())
