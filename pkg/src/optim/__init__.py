from .adam import AdamState, adam_step
from .scheduler import PlateauScheduler, plateau_update
from .trainer import TrainConfig, ClassTrainer, train_class
