"""
OvA-INN - One-versus-All Invertible Networks for continual learning
==================================================================

Mỗi class có một invertible network riêng, train để đưa samples của class
về gần gốc tọa độ. Predict = class có squared output norm nhỏ nhất.

Modules:
- numkit: SplitMix64 RNG và các kernel linear algebra
- flowcore: SubNet, additive coupling blocks, likelihood, gradients
- optim: Adam, plateau scheduler, class trainer
- continual: expert registry, inference, evaluation, prototype baseline, registry file
- dataio: MNIST IDX, OVAFEAT1 feature files, normalization, class streams
- cli: train / eval / predict / baseline / inspect
- monitoring: logging và training metrics

Version: 1.0.0
"""

__version__ = "1.0.0"

# Import main components
from .flowcore.network import InvertibleNet
from .optim.trainer import TrainConfig, ClassTrainer
from .continual.registry import ExpertRegistry
from .continual.evaluation import EvalReport
from .continual.prototype import PrototypeModel
from .monitoring.logger import RunLogger
from .monitoring.metrics import TrainingMetrics

__all__ = [
    'InvertibleNet',
    'TrainConfig',
    'ClassTrainer',
    'ExpertRegistry',
    'EvalReport',
    'PrototypeModel',
    'RunLogger',
    'TrainingMetrics',
]
