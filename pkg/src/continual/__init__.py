from .registry import ExpertRegistry, add_class
from .inference import predict, predict_multi_head, predict_batch, score_matrix
from .prototype import PrototypeModel, fit_prototypes, predict_prototype
from .evaluation import (
    EvalReport, TaskPartition, evaluate, evaluate_incremental,
    parse_task_partition, chunk_tasks,
)
from .persistence import (
    save_registry, load_registry, serialize_registry, deserialize_registry, serialize_expert,
)
