from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from tada2go.toolkit.alignmetrics.statistics import (SecondOrderStats,
                                                     frobenius_distance,
                                                     second_order)
from tada2go.toolkit.alignmetrics.transport import sinkhorn_divergence
from tada2go.toolkit.emulator.development import (check_saturation,
                                                  develop_stack)
from tada2go.toolkit.emulator.kernel import KernelParams
from tada2go.toolkit.exceptions.exceptions import (EmptySelectionException,
                                                   QuantTableMismatchException)
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs, decompress
from tada2go.toolkit.jpegcodec.quantization import QuantTable
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.residual.patches import (PatchConfig, ResidualPatchSet,
                                              build_patch_sets,
                                              log_patch_sets)
from tada2go.toolkit.utils.constants import (DEFAULT_EPSILON_SCALE,
                                             DEFAULT_SUBSAMPLE, LOSS_TERMS)


class LossConfig(NamedTuple):
    """
    Named tuple for the alignment loss settings.

    Attributes:
        lambda_cov (float): Weight of the covariance term.
        mu_wass (float): Weight of the Sinkhorn term.
        nu_corr (float): Weight of the correlation term.
        terms_enabled (tuple): Enabled subset of ('cov', 'wass', 'corr').
        init_norms (dict, optional): Per-term normalizers; set once from the initial loss.
        subsample (int): Patches per domain fed to the Sinkhorn term.
        epsilon_scale (float): Sinkhorn regularization as a fraction of the median cost.
        sinkhorn_max_iter (int): Iteration cap of each transport problem.
        sinkhorn_tol (float): Relative tolerance of the transport solver.
        subsample_seed (int): Seed of the Sinkhorn subsample, fixed for a whole run.
    """
    lambda_cov: float = 1.0
    mu_wass: float = 1.0
    nu_corr: float = 1.0
    terms_enabled: Tuple[str, ...] = LOSS_TERMS
    init_norms: Optional[Dict[str, float]] = None
    subsample: int = DEFAULT_SUBSAMPLE
    epsilon_scale: float = DEFAULT_EPSILON_SCALE
    sinkhorn_max_iter: int = 300
    sinkhorn_tol: float = 1e-6
    subsample_seed: int = 0

    def weight(self, term: str) -> float:
        return {'cov': self.lambda_cov, 'wass': self.mu_wass, 'corr': self.nu_corr}[term]

    def validated(self) -> 'LossConfig':
        """
        Raises:
            EmptySelectionException: If no known term is enabled.
        """
        unknown = [term for term in self.terms_enabled if term not in LOSS_TERMS]
        if unknown or not self.terms_enabled:
            raise EmptySelectionException(f"Loss terms must be a non-empty subset of {LOSS_TERMS}, got {self.terms_enabled}.")
        return self


class AlignmentLoss(NamedTuple):
    """
    Named tuple for one evaluation of the alignment loss.

    Attributes:
        raw (dict): Unweighted, unnormalized value per enabled term, summed over filters.
        normalized (dict): weight x raw / init_norm per enabled term.
        total (float): Sum of the normalized terms.
        per_filter (dict): filter id -> term -> raw value.
    """
    raw: Dict[str, float]
    normalized: Dict[str, float]
    total: float
    per_filter: Dict[str, Dict[str, float]]


class TargetReference(NamedTuple):
    """
    Named tuple for the fixed target side of the loss, computed once.

    Attributes:
        quant (QuantTable): Shared quantization table of the target images.
        patches (dict): filter id -> selected target patches.
        stats (dict): filter id -> second-order statistics of the selected patches.
        patch_config (PatchConfig): Extraction settings, reused for the source.
    """
    quant: QuantTable
    patches: Dict[str, ResidualPatchSet]
    stats: Dict[str, SecondOrderStats]
    patch_config: PatchConfig


def shared_quant_table(images: Sequence[JpegCoeffs]) -> QuantTable:
    """
    Raises:
        QuantTableMismatchException: If the images do not all use the same table.
        EmptySelectionException: If no image is given.
    """
    if not images:
        raise EmptySelectionException("No target image given.")
    quant = images[0].quant
    for index, image in enumerate(images[1:], start=1):
        if image.quant != quant:
            raise QuantTableMismatchException(
                f"Target image {index} uses {image.quant.identifier}, image 0 uses {quant.identifier}.")
    return quant


def prepare_target(images: Sequence[JpegCoeffs], patch_config: PatchConfig = PatchConfig()) -> TargetReference:
    """
    Decompresses the target images and extracts their selected residual patches and statistics.

    Args:
        images (Sequence[JpegCoeffs]): Target images sharing one table.
        patch_config (PatchConfig, optional): Extraction settings.

    Returns:
        TargetReference: The fixed target side of the loss.
    """
    quant = shared_quant_table(images)
    spatial = [decompress(image).pixels for image in images]
    patches = build_patch_sets(spatial, patch_config)
    log_patch_sets(patches, 'target')
    stats = {filter_id: second_order(patch_set) for filter_id, patch_set in patches.items()}
    return TargetReference(quant, patches, stats, patch_config)


def _subsample(samples: np.ndarray, count: int, seed: Sequence[int]) -> np.ndarray:
    if samples.shape[0] <= count:
        return samples
    rng = np.random.default_rng(list(seed))
    return samples[np.sort(rng.choice(samples.shape[0], size=count, replace=False))]


def _wasserstein(source: np.ndarray, target: np.ndarray, cfg: LossConfig, filter_index: int) -> float:
    result = sinkhorn_divergence(_subsample(source, cfg.subsample, (cfg.subsample_seed, filter_index)),
                                 _subsample(target, cfg.subsample, (cfg.subsample_seed, filter_index)),
                                 max_iter=cfg.sinkhorn_max_iter, tol=cfg.sinkhorn_tol,
                                 epsilon_scale=cfg.epsilon_scale)
    return result.value


def _target_stats(target_patches, filter_id: str) -> Tuple[ResidualPatchSet, SecondOrderStats]:
    if isinstance(target_patches, TargetReference):
        return target_patches.patches[filter_id], target_patches.stats[filter_id]
    patch_set = target_patches[filter_id]
    return patch_set, second_order(patch_set)


def _target_filters(target_patches) -> List[str]:
    return list(target_patches.patches if isinstance(target_patches, TargetReference) else target_patches)


def compute_loss(source_patches: Dict[str, ResidualPatchSet], target_patches, cfg: LossConfig) -> AlignmentLoss:
    """
    Per filter, the covariance, Sinkhorn and correlation discrepancies between source and target patches;
    summed over filters, weighted and divided by the initial values.

    Args:
        source_patches (Dict[str, ResidualPatchSet]): Source patches per filter.
        target_patches (Dict[str, ResidualPatchSet] or TargetReference): Target patches per filter.
        cfg (LossConfig): Loss settings.

    Returns:
        AlignmentLoss: Raw and normalized terms and the total.

    Raises:
        EmptySelectionException: If a filter has no patches on one side.
    """
    cfg.validated()
    raw = {term: 0.0 for term in cfg.terms_enabled}
    per_filter: Dict[str, Dict[str, float]] = {}
    for filter_index, filter_id in enumerate(_target_filters(target_patches)):
        if filter_id not in source_patches:
            raise EmptySelectionException(f"No source patches for filter '{filter_id}'.")
        source_set = source_patches[filter_id]
        target_set, target_stats = _target_stats(target_patches, filter_id)
        if source_set.selected_count == 0 or target_set.selected_count == 0:
            raise EmptySelectionException(f"Empty patch selection for filter '{filter_id}'.")
        source_stats = second_order(source_set)
        values = {}
        if 'cov' in cfg.terms_enabled:
            values['cov'] = frobenius_distance(source_stats.cov, target_stats.cov)
        if 'wass' in cfg.terms_enabled:
            values['wass'] = _wasserstein(source_set.selected_patches(), target_set.selected_patches(), cfg, filter_index)
        if 'corr' in cfg.terms_enabled:
            values['corr'] = frobenius_distance(source_stats.corr, target_stats.corr)
        per_filter[filter_id] = values
        for term, value in values.items():
            raw[term] += value

    norms = cfg.init_norms or {}
    normalized = {term: cfg.weight(term) * raw[term] / norms.get(term, 1.0) for term in cfg.terms_enabled}
    return AlignmentLoss(raw, normalized, float(sum(normalized.values())), per_filter)


def calibrate(cfg: LossConfig, initial: AlignmentLoss) -> LossConfig:
    """Sets the normalizers to the initial raw values; a term that starts at 0 is normalized by 1."""
    norms = {term: (value if value > 0 else 1.0) for term, value in initial.raw.items()}
    logger.info(f"Loss normalizers at initialization: {norms}")
    return cfg._replace(init_norms=norms)


def compute_eval(source_patches: Dict[str, ResidualPatchSet], target_patches, cfg: LossConfig) -> float:
    """
    Unnormalized evaluation loss: covariance distance plus Sinkhorn divergence, summed over filters.

    Independent of the enabled training terms and the weights.
    """
    eval_cfg = cfg._replace(terms_enabled=('cov', 'wass'), init_norms=None, lambda_cov=1.0, mu_wass=1.0)
    return compute_loss(source_patches, target_patches, eval_cfg).total


def source_patch_sets(raws: np.ndarray, kernel: KernelParams, target: TargetReference, mode: str = 'soft',
                      selection: Optional[Dict[str, np.ndarray]] = None) -> Dict[str, ResidualPatchSet]:
    """
    Develops a RAW stack with the kernel and the target table and extracts its selected patches.

    Args:
        raws (np.ndarray): (B, H, W) RAW stack.
        kernel (KernelParams): Development kernel.
        target (TargetReference): Fixed target side, providing the table and the patch settings.
        mode (str, optional): 'soft' or 'hard' rounding. Defaults to 'soft'.
        selection (dict, optional): filter id -> mask over the stack's patches. Replaces the variance selection
            of the developed stack when given.

    Raises:
        SaturatedDevelopmentException: If the developed batch is near-constant.
        InvalidPatchGeometryException: If a mask does not match the number of patches.
    """
    developed = develop_stack(raws, kernel.kernel, target.quant, mode)
    check_saturation(developed)
    if selection is None:
        return build_patch_sets(developed, target.patch_config)
    sets = build_patch_sets(developed, target.patch_config._replace(select=False))
    return {filter_id: patch_set.with_selection(selection[filter_id]) for filter_id, patch_set in sets.items()}


def source_selection(raws: np.ndarray, kernel: KernelParams, target: TargetReference,
                     mode: str = 'soft') -> Dict[str, np.ndarray]:
    """Variance-selection masks of a RAW stack developed with the kernel, one per filter."""
    sets = source_patch_sets(raws, kernel, target, mode)
    return {filter_id: patch_set.selected for filter_id, patch_set in sets.items()}


def batch_selection(selection: Dict[str, np.ndarray], indices: Sequence[int], pool_size: int) -> Dict[str, np.ndarray]:
    """
    Restricts pool-level masks to the images at the given pool indices.

    Patches are ordered image by image and every image of a stack yields the same number of patches.

    Raises:
        EmptySelectionException: If the batch keeps no patch for some filter.
    """
    masks = {}
    for filter_id, mask in selection.items():
        batch_mask = mask.reshape(pool_size, -1)[np.asarray(indices)].reshape(-1)
        if not batch_mask.any():
            raise EmptySelectionException(f"The epoch selection keeps no '{filter_id}' patch of this batch.")
        masks[filter_id] = batch_mask
    return masks


def batch_loss(kernel: KernelParams, raws: np.ndarray, target: TargetReference, cfg: LossConfig,
               mode: str = 'soft', selection: Optional[Dict[str, np.ndarray]] = None) -> AlignmentLoss:
    """Alignment loss of a RAW batch developed with the kernel, on the given patch selection if any."""
    return compute_loss(source_patch_sets(raws, kernel, target, mode, selection), target, cfg)


def eval_loss(kernel: KernelParams, raws: np.ndarray, target: TargetReference, cfg: LossConfig) -> float:
    """L_eval of a RAW pool developed with hard compression."""
    return compute_eval(source_patch_sets(raws, kernel, target, 'hard'), target, cfg)
