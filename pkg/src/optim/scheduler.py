"""
Plateau scheduler - giảm learning rate ×0.5 khi loss ngừng cải thiện
"""
import math
from dataclasses import dataclass, replace
from typing import Tuple


@dataclass(frozen=True)
class PlateauScheduler:
    current_lr: float
    patience: int
    factor: float = 0.5
    min_improvement: float = 1e-4   # relative threshold
    min_lr: float = 1e-6
    best_loss: float = math.inf
    epochs_since_best: int = 0
    halvings: int = 0

    @classmethod
    def start(cls, lr: float, patience: int, min_lr: float = 1e-6,
              min_improvement: float = 1e-4) -> "PlateauScheduler":
        return cls(current_lr=lr, patience=patience, min_lr=min_lr,
                   min_improvement=min_improvement)


def plateau_update(s: PlateauScheduler, epoch_loss: float) -> Tuple[PlateauScheduler, float]:
    """
    Feed one epoch loss

    Improvement = loss < best·(1 − min_improvement). Khi counter vượt patience:
    lr ← max(lr·factor, min_lr), counter reset. Đã chạm min_lr thì không giảm nữa.
    """
    if epoch_loss < s.best_loss * (1.0 - s.min_improvement):
        s = replace(s, best_loss=epoch_loss, epochs_since_best=0)
        return s, s.current_lr

    s = replace(s, epochs_since_best=s.epochs_since_best + 1)
    if s.epochs_since_best > s.patience:
        if s.current_lr > s.min_lr:
            new_lr = max(s.current_lr * s.factor, s.min_lr)
            s = replace(s, current_lr=new_lr, halvings=s.halvings + 1)
        s = replace(s, epochs_since_best=0)
    return s, s.current_lr
