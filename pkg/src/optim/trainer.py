"""
Class Trainer - train một InvertibleNet cho đúng một class rồi đóng băng
"""
import time
from dataclasses import dataclass, asdict, replace
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ConfigError, DimensionError, EmptyDatasetError
from ..flowcore import InvertibleNet, init_net, loss_and_gradients, loss_batch
from ..models import ActivationKind, TrainingSummary
from ..monitoring.logger import RunLogger
from ..monitoring.metrics import TrainingMetrics
from ..numkit import Rng, rng_permutation
from .adam import AdamState, adam_step
from .scheduler import PlateauScheduler, plateau_update


@dataclass(frozen=True)
class TrainConfig:
    """Cấu hình train một class"""
    learning_rate: float = 0.002
    epochs: int = 200
    weight_decay: float = 0.0
    patience: int = 20
    batch_size: int = 128
    rank: int = 16                    # m của factorization AB
    n_blocks: int = 2
    activation: ActivationKind = ActivationKind.RELU
    seed: int = 0
    min_lr: float = 1e-6
    init_bound: float = 1.0           # U[-init_bound/√fan_in, +init_bound/√fan_in]

    # Options ngoài bảng hyperparameter
    decoupled_weight_decay: bool = False
    swap_halves: bool = False         # swap_halves_between_blocks
    min_improvement: float = 1e-4

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if self.n_blocks < 1:
            raise ConfigError(f"n_blocks must be >= 1, got {self.n_blocks}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")
        if self.min_lr <= 0:
            raise ConfigError(f"min_lr must be > 0, got {self.min_lr}")
        if self.init_bound < 0:
            raise ConfigError(f"init_bound must be >= 0, got {self.init_bound}")
        if not isinstance(self.activation, ActivationKind):
            raise ConfigError(f"activation must be an ActivationKind, got {self.activation!r}")

    @classmethod
    def mnist(cls, **overrides) -> "TrainConfig":
        """MNIST hyperparameters: lr 0.002, 200 epochs, wd 0, patience 20, m 16"""
        base = dict(learning_rate=0.002, epochs=200, weight_decay=0.0, patience=20, rank=16)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def cifar100(cls, **overrides) -> "TrainConfig":
        """CIFAR-100 features: lr 0.002, 1000 epochs, wd 0.0002, patience 30, m 32"""
        base = dict(learning_rate=0.002, epochs=1000, weight_decay=0.0002, patience=30, rank=32)
        base.update(overrides)
        return cls(**base)

    def replace(self, **overrides) -> "TrainConfig":
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["activation"] = self.activation.value
        return data


class ClassTrainer:
    """
    Train một expert trên samples của một class duy nhất

    Features:
    - Mini-batch Adam trên mean squared output norm
    - Plateau scheduler trên epoch training loss
    - Per-epoch shuffle từ SplitMix64 stream
    - Không bao giờ đọc/ghi expert của class khác
    """

    def __init__(self, config: TrainConfig, metrics: Optional[TrainingMetrics] = None):
        self.config = config
        self.metrics = metrics
        self.logger = RunLogger("Trainer")

    def train(self, samples, rng: Rng, class_id: Optional[int] = None
              ) -> Tuple[InvertibleNet, TrainingSummary]:
        """
        Args:
            samples: (N, n) array hoặc list các vector cùng độ dài n (n chẵn)
            rng: generator cho init + shuffle
            class_id: chỉ dùng cho log

        Returns:
            (frozen net, training summary)
        """
        X = self._as_samples(samples)
        cfg = self.config
        started = time.perf_counter()

        net, rng = init_net(X.shape[1], cfg.rank, cfg.n_blocks, cfg.activation, rng,
                            init_bound=cfg.init_bound, swap_halves=cfg.swap_halves)
        initial_net = net
        initial_loss = loss_batch(net, X)

        state = AdamState()
        scheduler = PlateauScheduler.start(cfg.learning_rate, cfg.patience,
                                           min_lr=cfg.min_lr,
                                           min_improvement=cfg.min_improvement)
        lr = scheduler.current_lr
        epoch_losses, learning_rates = [], []
        n_samples = X.shape[0]

        for epoch in range(cfg.epochs):
            rng, order = rng_permutation(rng, n_samples)
            total = 0.0
            for start in range(0, n_samples, cfg.batch_size):
                batch = X[order[start:start + cfg.batch_size]]
                loss, grads = loss_and_gradients(net, batch)
                params, state = adam_step(net.parameters(), grads, state, lr,
                                          cfg.weight_decay, cfg.decoupled_weight_decay)
                net = self._apply(net, params, class_id, epoch)
                total += loss * batch.shape[0]

            epoch_loss = total / n_samples
            learning_rates.append(lr)
            epoch_losses.append(epoch_loss)
            scheduler, lr = plateau_update(scheduler, epoch_loss)
            self.logger.epoch_log(class_id, epoch + 1, epoch_loss, lr)

        final_loss = loss_batch(net, X)
        reverted = False
        if final_loss > initial_loss:
            self.logger.warning(
                f"Class {class_id}: final loss {final_loss:.6f} > initial {initial_loss:.6f}, "
                f"keeping the initial net"
            )
            net, final_loss, reverted = initial_net, initial_loss, True

        summary = TrainingSummary(
            class_id=class_id,
            n_samples=n_samples,
            initial_loss=initial_loss,
            final_loss=final_loss,
            epoch_losses=epoch_losses,
            learning_rates=learning_rates,
            lr_halvings=scheduler.halvings,
            seconds=time.perf_counter() - started,
            reverted_to_initial=reverted,
        )
        if self.metrics is not None:
            self.metrics.add_training(summary)
        else:
            self.logger.class_log(class_id, n_samples, initial_loss, final_loss)
        return net.freeze(), summary

    def _apply(self, net: InvertibleNet, params, class_id, epoch) -> InvertibleNet:
        try:
            return net.with_parameters(params)
        except DimensionError:
            raise ConfigError(
                f"training diverged for class {class_id} at epoch {epoch + 1}; "
                f"lower the learning rate"
            )

    @staticmethod
    def _as_samples(samples) -> np.ndarray:
        if isinstance(samples, np.ndarray):
            X = samples.astype(np.float64, copy=False)
        else:
            if len(samples) == 0:
                raise EmptyDatasetError("cannot train on an empty sample set")
            lengths = {len(np.ravel(s)) for s in samples}
            if len(lengths) != 1:
                raise DimensionError(f"samples have inconsistent lengths {sorted(lengths)}")
            X = np.array([np.ravel(s) for s in samples], dtype=np.float64)
        if X.size == 0:
            raise EmptyDatasetError("cannot train on an empty sample set")
        if X.ndim != 2:
            raise DimensionError(f"samples must form a 2-d array, got shape {X.shape}")
        if X.shape[0] == 0:
            raise EmptyDatasetError("cannot train on an empty sample set")
        if not np.all(np.isfinite(X)):
            raise DimensionError("samples contain non-finite values")
        return X


def train_class(samples, cfg: TrainConfig, rng: Rng) -> InvertibleNet:
    """Fresh net trained on one class, returned frozen"""
    net, _ = ClassTrainer(cfg).train(samples, rng)
    return net
