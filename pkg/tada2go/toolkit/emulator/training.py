from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from tada2go.toolkit.emulator.kernel import (KernelParams, init_kernel,
                                             project_constraints)
from tada2go.toolkit.emulator.loss import (LossConfig, TargetReference,
                                           batch_loss, batch_selection,
                                           calibrate, eval_loss, prepare_target,
                                           source_selection)
from tada2go.toolkit.exceptions.exceptions import (EmptySelectionException,
                                                   NonFiniteLossException,
                                                   SaturatedDevelopmentException)
from tada2go.toolkit.imagery.image import RawPool
from tada2go.toolkit.jpegcodec.compression import JpegCoeffs
from tada2go.toolkit.logs.config_logging import logger
from tada2go.toolkit.residual.patches import PatchConfig
from tada2go.toolkit.utils.constants import (DEFAULT_FD_STEP,
                                             DEFAULT_INIT_SIGMA, DEFAULT_Q_HIGH,
                                             DEFAULT_Q_LOW)

STOP_REASONS = ('max-epochs', 'early-stopping', 'diverged')


class TrainingHyperparameters(NamedTuple):
    """
    Named tuple for the kernel-learning hyperparameters.

    Attributes:
        kernel_size (int): Odd kernel size.
        constraints (str): 'none', 'sum-to-1', 'symmetry' or 'both'.
        sum_projection (str): 'uniform' or 'center'.
        init_sigma (float): Initialization noise around the identity.
        init_seed (int): Seed of the initialization noise.
        lr (float): Initial SGD learning rate.
        batch_size (int): RAW images per mini-batch.
        max_epochs (int): Epoch cap.
        patience_lr (int): Stagnant epochs before halving the learning rate.
        patience_stop (int): Stagnant epochs before stopping.
        fd_step (float): Central finite-difference step on the parameters.
        patch_h (int): Residual patch height.
        patch_w (int): Residual patch width.
        filters (tuple): Residual filters.
        q_low (float): Lower variance quantile.
        q_high (float): Upper variance quantile.
        select_patches (bool): Apply the variance selection.
        shuffle_seed (int): Seed of the per-epoch pool shuffle.
        workers (int): Threads evaluating finite-difference probes.
    """
    kernel_size: int = 7
    constraints: str = 'both'
    sum_projection: str = 'uniform'
    init_sigma: float = DEFAULT_INIT_SIGMA
    init_seed: int = 0
    lr: float = 0.001
    batch_size: int = 256
    max_epochs: int = 1000
    patience_lr: int = 100
    patience_stop: int = 200
    fd_step: float = DEFAULT_FD_STEP
    patch_h: int = 8
    patch_w: int = 16
    filters: tuple = ('KB', 'L4')
    q_low: float = DEFAULT_Q_LOW
    q_high: float = DEFAULT_Q_HIGH
    select_patches: bool = True
    shuffle_seed: int = 0
    workers: int = 1

    def patch_config(self) -> PatchConfig:
        return PatchConfig(self.patch_h, self.patch_w, tuple(self.filters), self.q_low, self.q_high,
                           self.select_patches)


class EpochRecord(NamedTuple):
    epoch: int
    lr: float
    raw: Dict[str, float]
    normalized: Dict[str, float]
    total: float
    l_eval: float
    best: bool


class TrainingState:
    """
    Progress of one kernel-learning run.

    Attributes:
        lr (float): Current learning rate.
        kernel (KernelParams): Current kernel.
        best_eval (float): Lowest L_eval seen, initial kernel included.
        best_kernel (KernelParams): Kernel reaching best_eval.
        initial_eval (float): L_eval of the initial kernel.
        epochs_since_improvement (int): Epochs since best_eval last decreased.
        history (List[EpochRecord]): One record per completed epoch.
        stop_reason (str): Why training ended, None while running.
        loss_config (LossConfig): Loss settings with the calibrated normalizers.
    """

    def __init__(self, kernel: KernelParams, lr: float, initial_eval: float, loss_config: LossConfig) -> None:
        self.lr = lr
        self.kernel = kernel
        self.best_eval = initial_eval
        self.best_kernel = kernel
        self.initial_eval = initial_eval
        self.epochs_since_improvement = 0
        self.history: List[EpochRecord] = []
        self.stop_reason: Optional[str] = None
        self.loss_config = loss_config

    @property
    def epoch(self) -> int:
        return len(self.history)

    @property
    def eval_history(self) -> List[float]:
        return [record.l_eval for record in self.history]

    def record(self, entry: EpochRecord) -> None:
        self.history.append(entry)

    def __repr__(self) -> str:
        return (f"TrainingState(epoch={self.epoch}, best_eval={self.best_eval:.6g}, lr={self.lr:.3g}, "
                f"stop_reason={self.stop_reason})")


def gradient(kernel: KernelParams, batch: np.ndarray, target: Optional[TargetReference], cfg: LossConfig,
             fd_step: float = DEFAULT_FD_STEP, loss_fn: Optional[Callable[[KernelParams], float]] = None,
             workers: int = 1, selection: Optional[Dict[str, np.ndarray]] = None) -> np.ndarray:
    """
    Central finite-difference gradient of the batch loss with respect to the kernel's free parameters.

    Args:
        kernel (KernelParams): Point of evaluation.
        batch (np.ndarray): (B, H, W) RAW batch.
        target (TargetReference): Fixed target side; unused with a custom loss_fn.
        cfg (LossConfig): Loss settings (normalizers and subsample seed fixed).
        fd_step (float, optional): Step on each parameter. Defaults to 1e-3.
        loss_fn (Callable, optional): Replaces the alignment loss, mapping a kernel to a scalar.
        workers (int, optional): Threads evaluating the 2P probes. Defaults to 1.
        selection (dict, optional): Source patch masks scored by every probe. Defaults to the variance
            selection of the batch developed with the kernel at the point of evaluation.

    Returns:
        np.ndarray: Gradient, one entry per parameter.

    Raises:
        NonFiniteLossException: If a probe yields a non-finite loss.
    """
    if fd_step <= 0:
        raise NonFiniteLossException(f"Finite-difference step must be positive, got {fd_step}.")
    if loss_fn is None:
        if selection is None:
            selection = source_selection(batch, kernel, target)

        def loss_fn(probe: KernelParams) -> float:
            return batch_loss(probe, batch, target, cfg, selection=selection).total

    params = kernel.parameters()
    probes = []
    for index in range(params.size):
        step = np.zeros_like(params)
        step[index] = fd_step
        probes.append(kernel.with_parameters(params + step))
        probes.append(kernel.with_parameters(params - step))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = np.array(list(executor.map(loss_fn, probes)), dtype=np.float64)
    else:
        values = np.array([loss_fn(probe) for probe in probes], dtype=np.float64)

    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        msg = (f"Non-finite loss at parameter {bad // 2} ({'+' if bad % 2 == 0 else '-'}{fd_step}), "
               f"parameters {np.round(params, 6).tolist()}.")
        logger.error(msg)
        raise NonFiniteLossException(msg)
    return (values[0::2] - values[1::2]) / (2.0 * fd_step)


def _mean_loss(losses) -> tuple:
    raw = {term: float(np.mean([loss.raw[term] for loss in losses])) for term in losses[0].raw}
    normalized = {term: float(np.mean([loss.normalized[term] for loss in losses])) for term in losses[0].normalized}
    return raw, normalized, float(np.mean([loss.total for loss in losses]))


def train(raw_pool: RawPool, target_images: Sequence[JpegCoeffs], cfg: LossConfig = LossConfig(),
          hyper: TrainingHyperparameters = TrainingHyperparameters(),
          on_epoch: Optional[Callable[[TrainingState], None]] = None) -> TrainingState:
    """
    Learns the development kernel aligning the emulated source with the target images.

    Target patches are computed once. Each epoch selects the source patches over the pool at the current kernel
    and shuffles the pool. Every mini-batch then takes one SGD step along the finite-difference gradient, all
    probes scoring the patches that selection kept. After the last batch the kernel is projected onto its
    constraints and the unnormalized L_eval is computed over the full pool with hard compression.
    The kernel minimizing L_eval is kept. The learning rate halves after patience_lr stagnant epochs; training
    stops after patience_stop stagnant epochs or max_epochs.

    Args:
        raw_pool (RawPool): Non-empty RAW pool.
        target_images (Sequence[JpegCoeffs]): Unlabeled target images sharing one table.
        cfg (LossConfig, optional): Loss settings; normalizers are calibrated at initialization when unset.
        hyper (TrainingHyperparameters, optional): Hyperparameters.
        on_epoch (Callable, optional): Called with the state after every epoch (checkpointing).

    Returns:
        TrainingState: Final state, with the best kernel and the stop reason.

    Raises:
        QuantTableMismatchException: If the target images use different tables.
        SaturatedDevelopmentException: If the initial kernel already saturates the development.
    """
    cfg = cfg.validated()
    target = prepare_target(target_images, hyper.patch_config())
    pool = raw_pool.stack()
    kernel = init_kernel(hyper.kernel_size, hyper.init_sigma, hyper.init_seed, hyper.constraints, hyper.sum_projection)

    if cfg.init_norms is None:
        cfg = calibrate(cfg, batch_loss(kernel, pool, target, cfg))
    initial_eval = eval_loss(kernel, pool, target, cfg)
    state = TrainingState(kernel, hyper.lr, initial_eval, cfg)
    logger.info(f"Kernel learning started: {len(raw_pool)} RAW images, {len(target_images)} targets "
                f"({target.quant.identifier}), L_eval(init)={initial_eval:.6g}.")

    batch_size = max(1, min(hyper.batch_size, len(raw_pool)))
    while state.epoch < hyper.max_epochs:
        epoch = state.epoch
        order = np.random.default_rng([hyper.shuffle_seed, epoch]).permutation(len(raw_pool))
        losses = []
        try:
            selection = source_selection(pool, state.kernel, target)
            for start in range(0, len(order), batch_size):
                indices = np.sort(order[start:start + batch_size])
                batch = pool[indices]
                try:
                    masks = batch_selection(selection, indices, len(raw_pool))
                except EmptySelectionException as err:
                    logger.warning(f"{err} Selecting on the batch instead.")
                    masks = source_selection(batch, state.kernel, target)
                losses.append(batch_loss(state.kernel, batch, target, cfg, selection=masks))
                grad = gradient(state.kernel, batch, target, cfg, hyper.fd_step, workers=hyper.workers,
                                selection=masks)
                state.kernel = state.kernel.with_parameters(state.kernel.parameters() - state.lr * grad)
            state.kernel = project_constraints(state.kernel)
            l_eval = eval_loss(state.kernel, pool, target, cfg)
            if not np.isfinite(l_eval):
                raise NonFiniteLossException(f"L_eval is not finite at epoch {epoch}.")
        except (NonFiniteLossException, SaturatedDevelopmentException) as err:
            logger.warning(f"Kernel learning diverged at epoch {epoch}: {err}. Keeping the best kernel.")
            state.stop_reason = 'diverged'
            return state

        improved = l_eval < state.best_eval
        if improved:
            state.best_eval = l_eval
            state.best_kernel = state.kernel
            state.epochs_since_improvement = 0
        else:
            state.epochs_since_improvement += 1
        raw, normalized, total = _mean_loss(losses)
        state.record(EpochRecord(epoch, state.lr, raw, normalized, total, l_eval, improved))
        logger.info(f"Epoch {epoch}: loss={total:.6g}, L_eval={l_eval:.6g}, best={state.best_eval:.6g}, lr={state.lr:.3g}")
        if on_epoch is not None:
            on_epoch(state)

        if state.epochs_since_improvement >= hyper.patience_stop:
            state.stop_reason = 'early-stopping'
            break
        if state.epochs_since_improvement and state.epochs_since_improvement % hyper.patience_lr == 0:
            state.lr /= 2.0
            logger.info(f"No L_eval improvement for {state.epochs_since_improvement} epochs, learning rate now {state.lr:.3g}.")

    if state.stop_reason is None:
        state.stop_reason = 'max-epochs'
    logger.info(f"Kernel learning finished after {state.epoch} epochs ({state.stop_reason}), "
                f"L_eval {state.initial_eval:.6g} -> {state.best_eval:.6g}.")
    return state
