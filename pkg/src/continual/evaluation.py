"""
Evaluation harness - accuracy, confusion matrix, incremental curve
"""
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import ConfigError, EmptyDatasetError, LabelError, UnknownClassError
from ..models import EvalMode, LabeledVectors
from ..monitoring.logger import RunLogger
from .inference import score_matrix


TaskPartition = List[List[int]]

CURVE_COLUMNS = ['classes_seen', 'accuracy']

logger = RunLogger("Evaluation")


@dataclass
class EvalReport:
    """Kết quả đánh giá trên một test set"""
    mode: EvalMode
    class_ids: List[int]                                  # thứ tự hàng/cột của confusion
    confusion_matrix: np.ndarray                          # rows = true, cols = predicted
    accuracy_after_each_batch: List[Tuple[int, float]] = field(default_factory=list)
    tasks: TaskPartition = field(default_factory=list)
    per_task_accuracy: List[float] = field(default_factory=list)
    baseline: Optional[str] = None
    sample_accuracy: Optional[float] = None             # tỉ lệ đúng trên mọi sample

    @property
    def final_accuracy(self) -> float:
        return self.accuracy_after_each_batch[-1][1] if self.accuracy_after_each_batch else 0.0

    @property
    def n_samples(self) -> int:
        return int(self.confusion_matrix.sum())

    @property
    def per_class_accuracy(self) -> Dict[int, float]:
        result = {}
        for i, class_id in enumerate(self.class_ids):
            total = int(self.confusion_matrix[i].sum())
            if total:
                result[class_id] = float(self.confusion_matrix[i, i] / total)
        return result

    @property
    def mean_task_accuracy(self) -> Optional[float]:
        """Multi-head score: trung bình accuracy trên các task"""
        if not self.per_task_accuracy:
            return None
        return float(np.mean(self.per_task_accuracy))

    def to_dict(self) -> Dict:
        return {
            'mode': self.mode.value,
            'baseline': self.baseline,
            'class_ids': self.class_ids,
            'n_samples': self.n_samples,
            'final_accuracy': self.final_accuracy,
            'sample_accuracy': self.sample_accuracy,
            'accuracy_after_each_batch': [
                {'classes_seen': seen, 'accuracy': acc} for seen, acc in self.accuracy_after_each_batch
            ],
            'per_class_accuracy': {str(k): v for k, v in self.per_class_accuracy.items()},
            'tasks': self.tasks,
            'per_task_accuracy': self.per_task_accuracy,
            'mean_task_accuracy': self.mean_task_accuracy,
            'confusion_matrix': self.confusion_matrix.astype(int).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.accuracy_after_each_batch, columns=CURVE_COLUMNS)

    def write_json(self, path: str) -> str:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(self.to_json() + "\n")
        return path

    def write_csv(self, path: str) -> str:
        """Accuracy curve: header classes_seen,accuracy"""
        self.curve_frame().to_csv(path, index=False)
        return path


def parse_task_partition(text: str, class_order: Optional[Sequence[int]] = None) -> TaskPartition:
    """
    "0-4;5-9", "0,1,2;3,4" hoặc "0,1|2,3" -> list các task

    Một số nguyên đơn k (ví dụ "10") chia class_order thành các task k class.
    """
    text = (text or "").strip()
    if not text:
        raise ConfigError("empty task partition")
    text = text.replace("|", ";")
    if text.isdigit():
        if class_order is None:
            raise ConfigError("a task size needs a class order to chunk")
        return chunk_tasks(class_order, int(text))

    tasks = []
    for chunk in text.split(";"):
        task = []
        for item in chunk.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                if "-" in item:
                    low, high = (int(v) for v in item.split("-", 1))
                    task.extend(range(low, high + 1))
                else:
                    task.append(int(item))
            except ValueError:
                raise ConfigError(f"cannot parse task item '{item}' in '{text}'")
        if task:
            tasks.append(task)
    validate_partition(tasks)
    return tasks


def chunk_tasks(class_order: Sequence[int], size: int) -> TaskPartition:
    if size < 1:
        raise ConfigError(f"task size must be >= 1, got {size}")
    order = [int(c) for c in class_order]
    return [order[i:i + size] for i in range(0, len(order), size)]


def validate_partition(tasks: TaskPartition):
    seen = set()
    for task in tasks:
        if not task:
            raise ConfigError("tasks must be non-empty")
        for class_id in task:
            if class_id in seen:
                raise ConfigError(f"class {class_id} appears in more than one task")
            seen.add(class_id)


def evaluate(model, test: LabeledVectors, mode: EvalMode = EvalMode.SINGLE_HEAD,
             task_partition: Optional[TaskPartition] = None, threads: int = 1,
             baseline: Optional[str] = None) -> EvalReport:
    """
    Accuracy + confusion của một ExpertRegistry hoặc PrototypeModel

    Args:
        model: object có class_ids và scores(X, threads)
        test: labeled test vectors, mọi label phải đã được đăng ký
        mode: single_head (argmin trên mọi class) hoặc multi_head (argmin trong task)
        task_partition: bắt buộc khi multi_head
    """
    if len(test) == 0:
        raise EmptyDatasetError("empty test set")
    registered = set(model.class_ids)
    unknown = sorted(set(test.classes) - registered)
    if unknown:
        raise LabelError(f"test labels {unknown} have no registered model")
    if mode == EvalMode.MULTI_HEAD and not task_partition:
        raise ConfigError("multi-head evaluation needs a task partition")
    if mode == EvalMode.SINGLE_HEAD:
        task_partition = None

    ids, scores = score_matrix(model, test.vectors, threads)
    column = {class_id: i for i, class_id in enumerate(ids)}
    labels = test.labels

    if task_partition is None:
        predicted_cols = np.argmin(scores, axis=1)
        tasks: TaskPartition = []
        task_accuracy: List[float] = []
    else:
        validate_partition(task_partition)
        tasks = [[int(c) for c in task] for task in task_partition]
        task_of = {c: t for t, task in enumerate(tasks) for c in task}
        missing = sorted(set(test.classes) - set(task_of))
        if missing:
            raise ConfigError(f"test classes {missing} belong to no task")
        outside = sorted({c for task in tasks for c in task} - registered)
        if outside:
            raise UnknownClassError(f"task classes {outside} are not registered")

        predicted_cols = np.empty(len(labels), dtype=np.int64)
        task_accuracy = []
        sample_task = np.array([task_of[int(c)] for c in labels])
        for t, task in enumerate(tasks):
            rows = np.flatnonzero(sample_task == t)
            if rows.size == 0:
                continue
            cols = np.array(sorted(column[c] for c in task))
            local = np.argmin(scores[np.ix_(rows, cols)], axis=1)
            predicted_cols[rows] = cols[local]
            hits = np.array(ids)[cols[local]] == labels[rows]
            task_accuracy.append(float(hits.mean()))

    predicted = np.array(ids)[predicted_cols]
    confusion = np.zeros((len(ids), len(ids)), dtype=np.int64)
    np.add.at(confusion, (np.array([column[int(c)] for c in labels]), predicted_cols), 1)
    sample_accuracy = float(np.mean(predicted == labels))
    # multi-head score = trung bình các task có sample, không weight theo size
    accuracy = float(np.mean(task_accuracy)) if task_partition is not None else sample_accuracy

    report = EvalReport(
        mode=mode,
        class_ids=ids,
        confusion_matrix=confusion,
        accuracy_after_each_batch=[(len(ids), accuracy)],
        tasks=tasks,
        per_task_accuracy=task_accuracy,
        baseline=baseline,
        sample_accuracy=sample_accuracy,
    )
    logger.eval_log(len(ids), accuracy, mode.value, n_samples=len(test))
    return report


def evaluate_incremental(model, test: LabeledVectors, class_batches: Sequence[Sequence[int]],
                         mode: EvalMode = EvalMode.SINGLE_HEAD,
                         task_partition: Optional[TaskPartition] = None,
                         threads: int = 1, baseline: Optional[str] = None) -> EvalReport:
    """
    Sau mỗi batch class: evaluate trên test data của mọi class đã thấy

    Model con chỉ chứa các class đã học (đúng như lúc đó trong continual run).
    """
    seen: List[int] = []
    curve: List[Tuple[int, float]] = []
    report: Optional[EvalReport] = None
    for batch in class_batches:
        seen.extend(int(c) for c in batch)
        seen_test = test.select(np.isin(test.labels, seen))
        if len(seen_test) == 0:
            logger.warning(f"No test samples for classes {seen}, skipping curve point")
            continue
        partial_tasks = None
        if task_partition:
            partial_tasks = [[c for c in task if c in seen] for task in task_partition]
            partial_tasks = [task for task in partial_tasks if task]
        report = evaluate(model.subset(seen), seen_test, mode, partial_tasks, threads, baseline)
        curve.append((len(seen), report.final_accuracy))
    if report is None:
        raise EmptyDatasetError("no test samples for any evaluated class")
    report.accuracy_after_each_batch = curve
    return report
