"""
Experiment configuration: nested named tuples read from a JSON file, validated before any stage runs.
"""
import json
import os
from typing import Any, NamedTuple, Optional, Tuple

from dotenv import load_dotenv

from tada2go.toolkit.emulator.loss import LossConfig
from tada2go.toolkit.emulator.training import TrainingHyperparameters
from tada2go.toolkit.exceptions.exceptions import (ConfigurationException,
                                                   TadaException)
from tada2go.toolkit.imagery.pipeline import (default_catalog, find_pipeline,
                                              load_catalog)
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.residual.filters import RESIDUAL_FILTERS
from tada2go.toolkit.steganalysis.features import SCHEMAS
from tada2go.toolkit.stego.embedding import EmbeddingConfig
from tada2go.toolkit.utils.constants import (BALANCES, CONSTRAINT_KINDS,
                                             KERNEL_SIZES, STRATEGIES,
                                             SUM_PROJECTIONS)

load_dotenv()

DEFAULT_OUTPUT_ROOT = 'runs'


class PoolConfig(NamedTuple):
    """
    Named tuple for a synthetic RAW pool.

    Attributes:
        count (int): Number of images.
        size (int): Side of the generated images, multiple of 8.
        noise_alpha (float): Signal-dependent noise gain.
        noise_beta (float): Signal-independent noise variance.
        smoothness (float): Content low-pass standard deviation.
        seed (int): Generation seed.
        crop (int, optional): Side of a uniformity-driven crop, none when unset.
        crop_mode (str): 'most-textured' or 'most-uniform'.
    """
    count: int = 64
    size: int = 256
    noise_alpha: float = 0.5
    noise_beta: float = 4.0
    smoothness: float = 1.5
    seed: int = 0
    crop: Optional[int] = None
    crop_mode: str = 'most-textured'


class SourceConfig(NamedTuple):
    """
    Named tuple for the analyst's source material.

    Attributes:
        pool (PoolConfig): RAW images available to the analyst.
        pipeline (str): Development of the naive SrcOnly source.
        catalog (str, optional): Pipeline catalog JSON of the comparison sources; the default catalog when unset.
    """
    pool: PoolConfig = PoolConfig()
    pipeline: str = 'identity'
    catalog: Optional[str] = None


class TargetConfig(NamedTuple):
    """
    Named tuple for the target domain.

    Attributes:
        pipeline (str): Development pipeline of the target, looked up in the source catalog.
        quant_table (Any): 'qf<NN>', a quality or an 8x8 list.
        pool (PoolConfig): RAW images developed into the target.
        directory (str, optional): External directory of target JPEGs, replacing the synthetic target.
    """
    pipeline: str = 'S'
    quant_table: Any = 'qf85'
    pool: PoolConfig = PoolConfig(count=192, seed=1)
    directory: Optional[str] = None


class ExperimentConfig(NamedTuple):
    """
    Named tuple for one experiment.

    Attributes:
        name (str): Experiment name, also the default output subdirectory.
        source (SourceConfig): Source material.
        target (TargetConfig): Target domain.
        embedding (EmbeddingConfig): Scheme, payload and seed.
        training (TrainingHyperparameters): Kernel-learning hyperparameters.
        loss (LossConfig): Alignment loss settings.
        strategies (tuple): Strategies to run.
        balances (tuple): Operational-set balances.
        train_pairs (int): Cover-stego pairs of the labeled target training set (TgtOnly).
        eval_pairs (int): Cover-stego pairs of the evaluation set.
        operational_size (int): Images of the unlabeled operational set.
        seeds (tuple): Repetition seeds.
        schema_id (str): Feature schema.
        detector_reg (float, optional): Detector regularization, 1 / n_train when unset.
        subspace_dims (tuple): Subspace-alignment dimensions tried by the oracle.
        subspace_fixed_dim (int): Dimension of the fixed-d subspace-alignment result.
        coral_eta (float): CORAL regularization.
        output_dir (str, optional): Output directory; TADA_OUTPUT_ROOT/name when unset.
        overwrite (bool): Replace existing results.
        workers (int): Threads for per-image work.
    """
    name: str = 'experiment'
    source: SourceConfig = SourceConfig()
    target: TargetConfig = TargetConfig()
    embedding: EmbeddingConfig = EmbeddingConfig()
    training: TrainingHyperparameters = TrainingHyperparameters(kernel_size=3, max_epochs=100, patience_lr=20,
                                                                patience_stop=40, lr=0.001, batch_size=32)
    loss: LossConfig = LossConfig()
    strategies: Tuple[str, ...] = STRATEGIES
    balances: Tuple[str, ...] = BALANCES
    train_pairs: int = 64
    eval_pairs: int = 64
    operational_size: int = 64
    seeds: Tuple[int, ...] = (0,)
    schema_id: str = 'dctr'
    detector_reg: Optional[float] = None
    subspace_dims: Tuple[int, ...] = (2, 4, 8, 16, 32)
    subspace_fixed_dim: int = 8
    coral_eta: float = 1.0
    output_dir: Optional[str] = None
    overwrite: bool = False
    workers: int = 1


def output_root() -> str:
    return os.getenv('TADA_OUTPUT_ROOT', DEFAULT_OUTPUT_ROOT)


def _is_record(value) -> bool:
    return isinstance(value, tuple) and hasattr(value, '_fields')


def _build(defaults, mapping, path: str):
    if not isinstance(mapping, dict):
        raise ConfigurationException(f"'{path}' must be an object, got {type(mapping).__name__}.")
    unknown = sorted(set(mapping) - set(defaults._fields))
    if unknown:
        raise ConfigurationException(f"Unknown keys in '{path}': {unknown}.")
    values = {}
    for key, value in mapping.items():
        default = getattr(defaults, key)
        if _is_record(default):
            values[key] = _build(default, value, f"{path}.{key}")
        elif isinstance(default, tuple) and isinstance(value, list):
            values[key] = tuple(value)
        elif isinstance(default, bool) and not isinstance(value, bool):
            raise ConfigurationException(f"'{path}.{key}' must be true or false, got {value!r}.")
        elif isinstance(default, (int, float)) and not isinstance(default, bool) and \
                (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigurationException(f"'{path}.{key}' must be a number, got {value!r}.")
        else:
            values[key] = value
    return defaults._replace(**values)


def as_dict(record) -> dict:
    """Plain JSON-ready form of a nested configuration."""
    if _is_record(record):
        return {key: as_dict(value) for key, value in record._asdict().items()}
    if isinstance(record, (tuple, list)):
        return [as_dict(value) for value in record]
    if isinstance(record, dict):
        return {key: as_dict(value) for key, value in record.items()}
    return record


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationException(message)


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """
    Checks every field of a configuration and the references between them.

    Raises:
        ConfigurationException: On the first invalid value.
    """
    _check(bool(config.name), "name must not be empty.")
    unknown = [strategy for strategy in config.strategies if strategy not in STRATEGIES]
    _check(bool(config.strategies) and not unknown, f"strategies must be a non-empty subset of {STRATEGIES}, got {unknown}.")
    unknown = [balance for balance in config.balances if balance not in BALANCES]
    _check(bool(config.balances) and not unknown, f"balances must be a non-empty subset of {BALANCES}, got {unknown}.")
    _check(len(set(config.strategies)) == len(config.strategies), "strategies must not repeat.")
    _check(len(set(config.balances)) == len(config.balances), "balances must not repeat.")
    _check(bool(config.seeds) and len(set(config.seeds)) == len(config.seeds), "seeds must be distinct and non-empty.")
    _check(config.schema_id in SCHEMAS, f"schema_id must be one of {sorted(SCHEMAS)}.")
    _check(config.train_pairs >= 2, "train_pairs must be at least 2.")
    _check(config.eval_pairs >= 1, "eval_pairs must be at least 1.")
    _check(config.operational_size >= 1, "operational_size must be at least 1.")
    _check(config.detector_reg is None or config.detector_reg > 0, "detector_reg must be positive.")
    _check(bool(config.subspace_dims) and all(d >= 1 for d in config.subspace_dims), "subspace_dims must be >= 1.")
    _check(config.subspace_fixed_dim >= 1, "subspace_fixed_dim must be >= 1.")
    _check(config.coral_eta > 0, "coral_eta must be positive.")
    _check(config.workers >= 1, "workers must be at least 1.")

    training = config.training
    _check(training.kernel_size in KERNEL_SIZES, f"training.kernel_size must be one of {KERNEL_SIZES}.")
    _check(training.constraints in CONSTRAINT_KINDS, f"training.constraints must be one of {CONSTRAINT_KINDS}.")
    _check(training.sum_projection in SUM_PROJECTIONS, f"training.sum_projection must be one of {SUM_PROJECTIONS}.")
    _check(training.patch_h % 8 == 0 and training.patch_w % 8 == 0 and training.patch_h > 0 and training.patch_w > 0,
           "training patch sizes must be positive multiples of 8.")
    _check(bool(training.filters) and all(f in RESIDUAL_FILTERS for f in training.filters),
           f"training.filters must be a non-empty subset of {sorted(RESIDUAL_FILTERS)}.")
    _check(0.0 <= training.q_low < training.q_high <= 1.0, "training quantiles must satisfy 0 <= q_low < q_high <= 1.")
    _check(training.lr > 0 and training.fd_step > 0, "training.lr and training.fd_step must be positive.")
    _check(training.max_epochs >= 1 and training.batch_size >= 1, "training.max_epochs and batch_size must be >= 1.")
    _check(training.patience_lr >= 1 and training.patience_stop >= 1, "training patiences must be >= 1.")

    for label, pool in (('source.pool', config.source.pool), ('target.pool', config.target.pool)):
        _check(pool.count >= 1 and pool.size >= 8 and pool.size % 8 == 0,
               f"{label} needs count >= 1 and a size that is a multiple of 8.")
        _check(pool.crop is None or (8 <= pool.crop <= pool.size), f"{label}.crop must lie in [8, size].")
    _check(config.source.pool.count >= 2, "source.pool.count must be at least 2.")
    if config.target.directory is None:
        needed = config.train_pairs + config.eval_pairs + config.operational_size
        _check(config.target.pool.count >= needed,
               f"target.pool.count must cover train_pairs + eval_pairs + operational_size = {needed}.")

    try:
        config.embedding.validated()
        config.loss.validated()
        QuantTable.from_config(config.target.quant_table)
        pipelines = catalog_pipelines(config)
        find_pipeline(pipelines, config.source.pipeline)
        if config.target.directory is None:
            find_pipeline(pipelines, config.target.pipeline)
    except TadaException as err:
        raise ConfigurationException(str(err))
    return config


def catalog_pipelines(config: ExperimentConfig):
    """Catalog pipelines of a configuration, compressed with the target table."""
    quant = QuantTable.from_config(config.target.quant_table)
    if config.source.catalog is None:
        return default_catalog(quant)
    return load_catalog(config.source.catalog, quant_override=quant)


def config_from_dict(document: dict) -> ExperimentConfig:
    """
    Raises:
        ConfigurationException: On unknown keys, wrongly typed or invalid values.
    """
    return validate_config(_build(ExperimentConfig(), document, 'config'))


def load_config(path: Optional[str]) -> ExperimentConfig:
    """
    Reads and validates a JSON experiment configuration; the defaults when path is None.

    Raises:
        ConfigurationException: If the file is unreadable or the configuration invalid.
    """
    if path is None:
        return validate_config(ExperimentConfig())
    try:
        with open(path, 'r') as file_handler:
            document = json.load(file_handler)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigurationException(f"Cannot read '{path}': {err}")
    return config_from_dict(document)


def resolve_output_dir(config: ExperimentConfig) -> str:
    return config.output_dir or os.path.join(output_root(), config.name)


def write_resolved_config(config: ExperimentConfig, path: str) -> str:
    with open(path, 'w') as file_handler:
        json.dump(as_dict(config), file_handler, indent=2, sort_keys=True)
    return path
