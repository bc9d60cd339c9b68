"""
Training loop: seeded minibatch Adadelta on the trajectory loss, full
validation on the final-step loss, one checkpoint per epoch.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import numpy.typing as npt
from loguru import logger

from multinet.core.errors import DataError, DivergenceError
from multinet.core.models import TrainConfig
from multinet.data.moments import Dataset
from multinet.data.pipeline import label_matrix
from multinet.harness.metrics import LossCurve
from multinet.model.checkpoint import save_checkpoint
from multinet.model.modes import prepare_images
from multinet.model.network import Z2Color
from multinet.nn.layers import Tensor
from multinet.nn.losses import mse_train_loss, mse_validation_loss
from multinet.nn.optim import Adadelta

# (epoch, rng) -> indices into the training set seen that epoch
BudgetSampler = Callable[[int, np.random.Generator], npt.NDArray[np.int64]]

EVAL_CHUNK = 64


@dataclass
class TrainingResult:
    """Curve of one run, its per-epoch checkpoints and the lowest-validation state."""

    curve: LossCurve
    checkpoints: List[Path] = field(default_factory=list)
    best_epoch: int = 0
    best_state: Dict[str, Tensor] = field(default_factory=dict)


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial, stream]))


def minibatches(order: npt.NDArray[np.int64], batch_size: int) -> List[npt.NDArray[np.int64]]:
    """
    Split a shuffled index order into minibatches.

    A trailing singleton is folded into the previous batch.
    """
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        logger.warning("Folding a singleton trailing minibatch into the previous batch")
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def _modes_for(model: Z2Color, dataset: Dataset, indices: npt.NDArray[np.int64]) -> Optional[np.ndarray]:
    return dataset.behavioral[indices].astype(np.int64) if model.is_multinet else None


def predict_dataset(model: Z2Color, dataset: Dataset, chunk: int = EVAL_CHUNK) -> Tensor:
    """Eval-mode predictions for every moment, shape (N, 20)."""
    was_training = model.training
    model.eval()
    try:
        outputs = []
        for start in range(0, len(dataset), chunk):
            idx = np.arange(start, min(start + chunk, len(dataset)))
            outputs.append(model.forward(prepare_images(dataset.images[idx]), _modes_for(model, dataset, idx)))
        return np.concatenate(outputs) if outputs else np.zeros((0, 20))
    finally:
        model.training = was_training


def validate(model: Z2Color, dataset: Dataset) -> float:
    """Final-step validation loss over the whole set."""
    if len(dataset) == 0:
        raise DataError("validation set is empty")
    return mse_validation_loss(predict_dataset(model, dataset), label_matrix(dataset))


def train_step(model: Z2Color, optimizer: Adadelta, dataset: Dataset, batch: npt.NDArray[np.int64]) -> float:
    """One Adadelta step on a minibatch; returns the batch's training loss."""
    model.train()
    pred = model.forward(prepare_images(dataset.images[batch]), _modes_for(model, dataset, batch))
    loss, grad = mse_train_loss(pred, dataset.labels[batch].astype(np.float64))
    if not np.isfinite(loss):
        return loss
    model.zero_grad()
    model.backward(grad)
    optimizer.step(model.named_parameters(), model.named_gradients())
    return loss


def train(
    model: Z2Color,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
    trial: int = 0,
    network: Optional[str] = None,
    budget_sampler: Optional[BudgetSampler] = None,
    checkpoint_dir: Optional[Path] = None,
) -> TrainingResult:
    """
    Train one network.

    Args:
        model: Freshly initialized network, trained in place
        train_set: Training moments
        val_set: Validation moments
        config: Epochs, batch size, optimizer and seed
        trial: Trial index mixed into the shuffle seed
        network: Label for curves and checkpoint names (default: the variant)
        budget_sampler: Draws the indices seen each epoch (default: all)
        checkpoint_dir: Directory for per-epoch checkpoints (overrides config)

    Returns:
        Loss curve, checkpoint paths and the lowest-validation state
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise DataError("training and validation sets must be nonempty")
    network = network or model.variant.value
    checkpoint_dir = checkpoint_dir if checkpoint_dir is not None else config.checkpoint_dir
    rng = trial_rng(config.seed, trial)
    optimizer = Adadelta(config.optimizer)
    result = TrainingResult(curve=LossCurve(network=network, trial=trial))
    best_loss = np.inf

    for epoch in range(1, config.epochs + 1):
        indices = budget_sampler(epoch, rng) if budget_sampler is not None else np.arange(len(train_set))
        order = rng.permutation(indices)
        total, seen = 0.0, 0
        for b, batch in enumerate(minibatches(order, config.batch_size)):
            loss = train_step(model, optimizer, train_set, batch)
            if not np.isfinite(loss):
                raise DivergenceError(f"{network} trial {trial}: non-finite training loss", epoch=epoch, batch=b)
            total += loss * len(batch)
            seen += len(batch)
            logger.trace(f"{network} trial {trial} epoch {epoch} batch {b}: loss {loss:.6f}")

        val_loss = validate(model, val_set)
        if not np.isfinite(val_loss):
            raise DivergenceError(f"{network} trial {trial}: non-finite validation loss", epoch=epoch)
        result.curve.train_loss.append(total / seen)
        result.curve.val_loss.append(val_loss)
        result.curve.moments_per_epoch.append(seen)
        if val_loss < best_loss:
            best_loss, result.best_epoch, result.best_state = val_loss, epoch, model.copy_state()

        if checkpoint_dir is not None:
            path = Path(checkpoint_dir) / f"{network}_trial{trial:02d}_epoch{epoch:02d}.mnck"
            meta = {"network": network, "trial": trial, "epoch": epoch, "val_loss": val_loss}
            result.checkpoints.append(save_checkpoint(model, path, meta))
        logger.info(
            f"{network} trial {trial} epoch {epoch}/{config.epochs}: "
            f"train {total / seen:.6f} val {val_loss:.6f} ({seen} moments)"
        )

    model.eval()
    return result
