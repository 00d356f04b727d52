"""
Subcommand implementations: train, eval, predict, baseline, inspect

Mỗi command nhận RunConfig đã validate, ghi kết quả machine-parseable ra `out`
(stdout) và trả về exit status. Log đi ra stderr.
"""
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd

from ..continual import (
    ExpertRegistry, EvalReport, add_class, evaluate_incremental, fit_prototypes,
    load_registry, parse_task_partition, predict_batch, save_registry, score_matrix,
)
from ..continual.persistence import MAGIC as REGISTRY_MAGIC, VERSION as REGISTRY_VERSION
from ..dataio import (
    dequantize, limit_per_class, load_feature_file, load_mnist_idx, make_class_stream,
    normalize, pad_to_even, read_bytes,
)
from ..dataio.feature_file import MAGIC as FEATURE_MAGIC, parse_feature_file
from ..exceptions import (
    ConfigError, DimensionError, EmptyDatasetError, FormatError, LabelError, EXIT_OK,
)
from ..flowcore import InvertibleNet
from ..models import ClassStream, LabeledVectors, TrainingSummary
from ..monitoring.logger import RunLogger
from ..monitoring.metrics import TrainingMetrics
from ..numkit import Rng, derive_seed
from ..optim import ClassTrainer
from .config import RunConfig


logger = RunLogger("Commands")


# ==================== DATA ====================

def load_dataset(images: Optional[str], labels: Optional[str], features: Optional[str]) -> LabeledVectors:
    if features:
        return load_feature_file(features)
    return load_mnist_idx(images, labels)


def prepare(ds: LabeledVectors, cfg: RunConfig, rng: Optional[Rng] = None
            ) -> Tuple[LabeledVectors, Optional[Rng]]:
    """dequantize (chỉ train data) -> normalize -> pad_to_even"""
    if rng is not None and cfg.dequantize:
        ds, rng = dequantize(ds, rng)
    return pad_to_even(normalize(ds, cfg.normalization)), rng


def training_stream(cfg: RunConfig) -> ClassStream:
    raw = load_dataset(cfg.mnist_images, cfg.mnist_labels, cfg.features)
    if cfg.max_per_class:
        raw = limit_per_class(raw, cfg.max_per_class)
    return make_class_stream(raw, cfg.class_order)


def test_set(cfg: RunConfig) -> LabeledVectors:
    """--test-* nếu có, nếu không thì dataset chính"""
    if cfg.has_test_data:
        raw = load_dataset(cfg.test_mnist_images, cfg.test_mnist_labels, cfg.test_features)
    else:
        raw = load_dataset(cfg.mnist_images, cfg.mnist_labels, cfg.features)
    ds, _ = prepare(raw, cfg)
    return ds


def report_paths(path: str) -> Tuple[str, str]:
    """'runs/report' hoặc 'runs/report.json' -> ('runs/report.json', 'runs/report.csv')"""
    root, ext = os.path.splitext(path)
    if ext.lower() not in (".json", ".csv"):
        root = path
    return root + ".json", root + ".csv"


def write_report(report: EvalReport, path: Optional[str]):
    if not path:
        return
    json_path, csv_path = report_paths(path)
    for target in (json_path, csv_path):
        directory = os.path.dirname(os.path.abspath(target))
        os.makedirs(directory, exist_ok=True)
    report.write_json(json_path)
    report.write_csv(csv_path)
    logger.info(f"Report written to {json_path} and {csv_path}")


def _evaluate_stream(model, test: LabeledVectors, order: List[int], cfg: RunConfig,
                     every_class: bool, baseline: Optional[str] = None) -> EvalReport:
    tasks = parse_task_partition(cfg.tasks, class_order=order) if cfg.tasks else None
    present = set(test.classes)
    batches = [[c] for c in order] if every_class else [list(order)]
    test = test.select(np.isin(test.labels, order))
    missing = sorted(set(order) - present)
    if missing:
        logger.warning(f"No test samples for classes {missing}")
    return evaluate_incremental(model, test, batches, cfg.mode, tasks, cfg.threads, baseline)


# ==================== TRAIN ====================

def _check_compatible(reg: ExpertRegistry, dim: int, cfg: RunConfig):
    """Registry resume phải khớp dim và kiến trúc"""
    if reg.dim is not None and reg.dim != dim:
        raise ConfigError(f"registry {cfg.model_path} has dim {reg.dim}, data has {dim}")
    train = cfg.train
    for class_id, net in reg.items():
        expected = (train.rank, train.n_blocks, train.activation, train.swap_halves)
        actual = (net.rank, net.n_blocks, net.activation, net.swap_halves)
        if actual != expected:
            raise ConfigError(
                f"class {class_id} in {cfg.model_path} was trained with rank={net.rank} "
                f"blocks={net.n_blocks} activation={net.activation.value} "
                f"swap_halves={net.swap_halves}; use --no-resume or matching flags"
            )


def _initial_registry(cfg: RunConfig, dim: int) -> ExpertRegistry:
    if not (cfg.resume and os.path.exists(cfg.model_path)):
        return ExpertRegistry()
    registry = load_registry(cfg.model_path)
    _check_compatible(registry, dim, cfg)
    logger.info(f"Resuming from {cfg.model_path}: classes {registry.class_ids} already trained")
    return registry


def _train_one(trainer: ClassTrainer, cfg: RunConfig, class_id: int, batch: LabeledVectors
               ) -> Tuple[int, InvertibleNet, TrainingSummary]:
    rng = Rng(derive_seed(cfg.train.seed, class_id))
    samples, rng = prepare(batch, cfg, rng)
    net, summary = trainer.train(samples.vectors, rng, class_id=class_id)
    return class_id, net, summary


def _train_pending(trainer: ClassTrainer, cfg: RunConfig,
                   pending: List[Tuple[int, LabeledVectors]]
                   ) -> Iterator[Tuple[int, InvertibleNet, TrainingSummary]]:
    """Kết quả theo đúng thứ tự class, kể cả khi train song song"""
    if cfg.parallel_classes and cfg.threads > 1 and len(pending) > 1:
        logger.info(f"Training {len(pending)} classes on {cfg.threads} threads (logs interleave)")
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(_train_one, trainer, cfg, c, b) for c, b in pending]
            for future in futures:
                yield future.result()
    else:
        for class_id, batch in pending:
            yield _train_one(trainer, cfg, class_id, batch)


class IncrementalCurve:
    """
    Accuracy curve cập nhật sau mỗi checkpoint

    Một điểm cho mỗi prefix của class order đã có đủ expert trong registry, report
    được ghi lại mỗi lần nên run bị dừng giữa chừng vẫn giữ phần curve đã có.
    """

    def __init__(self, test: LabeledVectors, order: List[int], cfg: RunConfig):
        missing = sorted(set(order) - set(test.classes))
        if missing:
            logger.warning(f"No test samples for classes {missing}")
        self.test = test.select(np.isin(test.labels, order))
        self.order = list(order)
        self.cfg = cfg
        self.tasks = parse_task_partition(cfg.tasks, class_order=order) if cfg.tasks else None
        self.evaluated = 0
        self.points: List[Tuple[int, float]] = []
        self.report: Optional[EvalReport] = None

    def advance(self, registry: ExpertRegistry) -> List[Tuple[int, float]]:
        """Evaluate mọi prefix mới hoàn chỉnh, trả về các điểm mới"""
        new_points = []
        while self.evaluated < len(self.order) and self.order[self.evaluated] in registry:
            self.evaluated += 1
            prefix = self.order[:self.evaluated]
            if not np.isin(self.test.labels, prefix).any():
                logger.warning(f"No test samples for classes {prefix}, skipping curve point")
                continue
            report = evaluate_incremental(registry, self.test, [prefix], self.cfg.mode,
                                          self.tasks, self.cfg.threads)
            new_points.extend(report.accuracy_after_each_batch)
            self.points.extend(report.accuracy_after_each_batch)
            report.accuracy_after_each_batch = list(self.points)
            self.report = report
        if new_points:
            write_report(self.report, self.cfg.report_path)
        return new_points


def cmd_train(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """
    Train class-by-class, checkpoint sau mỗi class

    stdout: CSV `class_id,final_loss` (một dòng mỗi class vừa train)
    """
    stream = training_stream(cfg)
    order = stream.class_order
    test = test_set(cfg) if cfg.has_test_data else None
    every_class = cfg.eval_every_class if cfg.eval_every_class is not None else test is not None
    if every_class and test is None:
        raise ConfigError("--eval-every-class needs --test-mnist-images/--test-mnist-labels or --test-features")

    dim = stream.batches[0][1].dim
    dim += dim % 2
    if test is not None and test.dim != dim:
        raise DimensionError(f"test data has dim {test.dim}, training data {dim}")

    registry = _initial_registry(cfg, dim)
    pending = [(c, batch) for c, batch in stream if c not in registry]
    skipped = [c for c in order if c in registry]
    if skipped:
        logger.info(f"Skipping already trained classes {skipped}")

    logger.info(
        f"🚀 Training {len(pending)} classes in order {[c for c, _ in pending]}",
        extra=cfg.train.to_dict(),
    )
    metrics = TrainingMetrics()
    trainer = ClassTrainer(cfg.train)
    curve = IncrementalCurve(test, order, cfg) if every_class else None
    if curve is not None:
        for point in curve.advance(registry):
            metrics.add_eval_point(*point)

    out = out or sys.stdout
    print("class_id,final_loss", file=out)
    for class_id, net, summary in _train_pending(trainer, cfg, pending):
        registry = add_class(registry, class_id, net)
        save_registry(registry, cfg.model_path)
        metrics.record(summary)
        print(f"{class_id},{summary.final_loss:.10g}", file=out)
        out.flush()
        if curve is not None:
            for point in curve.advance(registry):
                metrics.add_eval_point(*point)

    if curve is not None:
        if curve.report is None:
            raise EmptyDatasetError("no test samples for any evaluated class")
    elif test is not None:
        report = _evaluate_stream(registry, test, order, cfg, every_class=False)
        for point in report.accuracy_after_each_batch:
            metrics.add_eval_point(*point)
        write_report(report, cfg.report_path)
    elif cfg.report_path:
        logger.warning("--report ignored: no test data given")

    if cfg.metrics_path:
        metrics.export_csv(cfg.metrics_path)
    logger.info("\n" + metrics.get_report())
    logger.performance_log(metrics.summary())
    logger.info(f"✅ Registry {cfg.model_path}: {len(registry)} classes, {registry.param_count()} parameters")
    return EXIT_OK


# ==================== EVAL / BASELINE ====================

def _eval_order(cfg: RunConfig, class_ids: List[int]) -> List[int]:
    if cfg.class_order is None:
        return list(class_ids)
    unknown = [c for c in cfg.class_order if c not in class_ids]
    if unknown:
        raise ConfigError(f"class order names unregistered classes {unknown}")
    return list(cfg.class_order)


def cmd_eval(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """stdout: final accuracy"""
    registry = load_registry(cfg.model_path)
    test = test_set(cfg)
    unknown = sorted(set(test.classes) - set(registry.class_ids))
    if unknown:
        raise LabelError(f"test labels {unknown} have no registered model in {cfg.model_path}")
    order = _eval_order(cfg, registry.class_ids)
    every_class = cfg.eval_every_class if cfg.eval_every_class is not None else True
    report = _evaluate_stream(registry, test, order, cfg, every_class)
    write_report(report, cfg.report_path)
    print(f"{report.final_accuracy:.6f}", file=out)
    return EXIT_OK


def cmd_baseline(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """Nearest-prototype trên cùng class stream, report tagged baseline=prototype"""
    stream = training_stream(cfg)
    prepared = {c: prepare(batch, cfg)[0].vectors for c, batch in stream}
    model = fit_prototypes(prepared)
    test = test_set(cfg)
    every_class = cfg.eval_every_class if cfg.eval_every_class is not None else True
    report = _evaluate_stream(model, test, stream.class_order, cfg, every_class, baseline="prototype")
    write_report(report, cfg.report_path)
    print(f"{report.final_accuracy:.6f}", file=out)
    return EXIT_OK


# ==================== PREDICT ====================

def read_inputs(path: str) -> np.ndarray:
    """OVAFEAT1 file (labels bỏ qua) hoặc CSV mỗi dòng một vector"""
    data = read_bytes(path)
    if data[:len(FEATURE_MAGIC)] == FEATURE_MAGIC:
        return parse_feature_file(data, path).vectors
    try:
        frame = pd.read_csv(io.BytesIO(data), header=None)
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError(f"{path}: no input rows")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise FormatError(f"unreadable CSV input ({e})", path)
    frame = frame.apply(pd.to_numeric, errors="coerce")
    if len(frame) and frame.iloc[0].isna().all():
        frame = frame.iloc[1:]
    if len(frame) == 0:
        raise EmptyDatasetError(f"{path}: no input rows")
    if frame.isna().any().any():
        raise DimensionError(f"{path}: non-numeric or missing values in input rows")
    return frame.to_numpy(dtype=np.float64)


def cmd_predict(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """stdout: CSV `class_id,score_<c>...` một dòng mỗi input"""
    registry = load_registry(cfg.model_path)
    X = read_inputs(cfg.input_path)
    raw = LabeledVectors(dim=X.shape[1], vectors=X, labels=np.zeros(X.shape[0], dtype=np.int64))
    inputs, _ = prepare(raw, cfg)
    if len(registry) and inputs.dim != registry.dim:
        raise DimensionError(f"inputs have dim {inputs.dim}, registry expects {registry.dim}")

    predicted = predict_batch(registry, inputs.vectors, threads=cfg.threads)
    ids, scores = score_matrix(registry, inputs.vectors, cfg.threads)
    frame = pd.DataFrame(scores, columns=[f"score_{c}" for c in ids])
    frame.insert(0, "class_id", predicted)
    frame.to_csv(out or sys.stdout, index=False, float_format="%.10g")
    return EXIT_OK


# ==================== INSPECT ====================

def cmd_inspect(cfg: RunConfig, out: Optional[TextIO] = None) -> int:
    """Registry header, rồi per-class parameter counts và total"""
    registry = load_registry(cfg.model_path)
    header = pd.DataFrame([{
        "magic": REGISTRY_MAGIC.decode("ascii"),
        "version": REGISTRY_VERSION,
        "net_count": len(registry),
        "dim": registry.dim or 0,
    }])
    header.to_csv(out or sys.stdout, index=False)
    print(file=out)

    counts = registry.param_counts()
    rows = [{
        "class_id": class_id,
        "n_blocks": net.n_blocks,
        "rank": net.rank,
        "activation": net.activation.value,
        "swap_halves": net.swap_halves,
        "param_count": counts[class_id],
    } for class_id, net in registry.items()]
    experts = pd.DataFrame(rows, columns=["class_id", "n_blocks", "rank", "activation",
                                          "swap_halves", "param_count"])
    experts.to_csv(out or sys.stdout, index=False)
    print(f"total,{registry.param_count()}", file=out)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "baseline": cmd_baseline,
    "inspect": cmd_inspect,
}
