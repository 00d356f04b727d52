"""
Run configuration: defaults < preset < config file < command-line flags
"""
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional

from dotenv import dotenv_values

from ..exceptions import ConfigError
from ..models import ActivationKind, EvalMode, Normalization
from ..optim import TrainConfig
from ..dataio import parse_class_order, parse_normalization


PRESETS: Dict[str, Callable[..., TrainConfig]] = {
    "mnist": TrainConfig.mnist,
    "cifar100": TrainConfig.cifar100,
}

# Alternative spellings -> canonical key
ALIASES = {
    "lr": "learning_rate",
    "n_blocks": "blocks",
    "decoupled_weight_decay": "decoupled_wd",
    "model_path": "model",
    "report_path": "report",
    "metrics_path": "metrics",
    "normalization": "normalize",
    "task_partition": "tasks",
    "swap_halves_between_blocks": "swap_halves",
}


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_int(value: Any) -> Optional[int]:
    if value is None or str(value).strip() == "":
        return None
    return int(value)


# canonical key -> (TrainConfig field, converter)
TRAIN_KEYS: Dict[str, tuple] = {
    "learning_rate": ("learning_rate", float),
    "epochs": ("epochs", int),
    "weight_decay": ("weight_decay", float),
    "patience": ("patience", int),
    "batch_size": ("batch_size", int),
    "rank": ("rank", int),
    "blocks": ("n_blocks", int),
    "activation": ("activation", ActivationKind.parse),
    "seed": ("seed", int),
    "min_lr": ("min_lr", float),
    "init_bound": ("init_bound", float),
    "decoupled_wd": ("decoupled_weight_decay", _to_bool),
    "swap_halves": ("swap_halves", _to_bool),
}

# canonical key -> (RunConfig field, converter)
RUN_KEYS: Dict[str, tuple] = {
    "mnist_images": ("mnist_images", str),
    "mnist_labels": ("mnist_labels", str),
    "features": ("features", str),
    "test_mnist_images": ("test_mnist_images", str),
    "test_mnist_labels": ("test_mnist_labels", str),
    "test_features": ("test_features", str),
    "normalize": ("normalization", parse_normalization),
    "class_order": ("class_order", parse_class_order),
    "model": ("model_path", str),
    "report": ("report_path", str),
    "metrics": ("metrics_path", str),
    "mode": ("mode", EvalMode.parse),
    "tasks": ("tasks", str),
    "threads": ("threads", int),
    "parallel_classes": ("parallel_classes", _to_bool),
    "eval_every_class": ("eval_every_class", _to_bool),
    "max_per_class": ("max_per_class", _optional_int),
    "dequantize": ("dequantize", _to_bool),
    "resume": ("resume", _to_bool),
    "input": ("input_path", str),
}

META_KEYS = {"preset", "config"}


@dataclass
class RunConfig:
    """Toàn bộ cấu hình của một lần chạy CLI"""
    # Dataset
    mnist_images: Optional[str] = None
    mnist_labels: Optional[str] = None
    features: Optional[str] = None
    test_mnist_images: Optional[str] = None
    test_mnist_labels: Optional[str] = None
    test_features: Optional[str] = None
    normalization: Normalization = field(default_factory=Normalization)
    class_order: Optional[List[int]] = None
    max_per_class: Optional[int] = None
    dequantize: bool = False

    # Training
    train: TrainConfig = field(default_factory=TrainConfig)
    preset: Optional[str] = None

    # Artifacts
    model_path: Optional[str] = None
    report_path: Optional[str] = None
    metrics_path: Optional[str] = None
    input_path: Optional[str] = None

    # Protocol
    mode: EvalMode = EvalMode.SINGLE_HEAD
    tasks: Optional[str] = None
    threads: int = 1
    parallel_classes: bool = False
    eval_every_class: Optional[bool] = None   # None: bật khi có test data
    resume: bool = True

    @property
    def has_test_data(self) -> bool:
        return bool(self.test_mnist_images or self.test_mnist_labels or self.test_features)

    def validate(self, command: str = "train"):
        """Kiểm tra các ràng buộc phụ thuộc subcommand"""
        if command in ("train", "baseline") or (command == "eval" and not self.has_test_data):
            self._validate_dataset(self.mnist_images, self.mnist_labels, self.features, "")
        if self.has_test_data:
            self._validate_dataset(self.test_mnist_images, self.test_mnist_labels,
                                   self.test_features, "test-")
        if command in ("train", "eval", "predict", "inspect") and not self.model_path:
            raise ConfigError(f"'{command}' needs --model")
        if command == "predict" and not self.input_path:
            raise ConfigError("'predict' needs --input")
        if command == "baseline" and not self.has_test_data:
            raise ConfigError("'baseline' needs --test-mnist-images/--test-mnist-labels or --test-features")
        if self.mode == EvalMode.MULTI_HEAD and not self.tasks:
            raise ConfigError("--mode=multi needs --tasks")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.max_per_class is not None and self.max_per_class < 1:
            raise ConfigError(f"max_per_class must be >= 1, got {self.max_per_class}")
        self.train.validate()

    @staticmethod
    def _validate_dataset(images, labels, features, prefix: str):
        has_mnist = bool(images or labels)
        if has_mnist and not (images and labels):
            raise ConfigError(f"--{prefix}mnist-images and --{prefix}mnist-labels go together")
        if has_mnist == bool(features):
            raise ConfigError(
                f"give exactly one dataset: --{prefix}mnist-images/--{prefix}mnist-labels "
                f"or --{prefix}features"
            )


def canonical_key(key: str) -> str:
    key = key.strip().lower().lstrip("-").replace("-", "_")
    return ALIASES.get(key, key)


def read_config_file(path: str) -> Dict[str, str]:
    """Flat key=value file (dotenv syntax); keys are the long flag names"""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for key, value in dotenv_values(path).items():
        name = canonical_key(key)
        if name not in TRAIN_KEYS and name not in RUN_KEYS and name != "preset":
            raise ConfigError(f"unknown key '{key}' in {path}")
        if value is not None:
            values[name] = value
    return values


def build_run_config(flags: Mapping[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """
    Gộp các nguồn cấu hình theo precedence

    Args:
        flags: chỉ các flag user thực sự truyền (giá trị None bị bỏ qua)
        config_path: optional --config file
    """
    values: Dict[str, Any] = {}
    if config_path:
        values.update(read_config_file(config_path))
    for key, value in flags.items():
        if value is not None:
            values[canonical_key(key)] = value

    preset = values.pop("preset", None)
    if preset is not None:
        preset = str(preset).strip().lower()
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}' (choose from {', '.join(PRESETS)})")
    train = PRESETS[preset]() if preset else TrainConfig()

    train_overrides: Dict[str, Any] = {}
    run_fields: Dict[str, Any] = {}
    for key, value in values.items():
        if key in META_KEYS:
            continue
        if key in TRAIN_KEYS:
            target, convert = TRAIN_KEYS[key]
            train_overrides[target] = _convert(key, value, convert)
        elif key in RUN_KEYS:
            target, convert = RUN_KEYS[key]
            run_fields[target] = _convert(key, value, convert)
        else:
            raise ConfigError(f"unknown option '{key}'")

    if train_overrides:
        train = train.replace(**train_overrides)
    return RunConfig(train=train, preset=preset, **run_fields)


def _convert(key: str, value: Any, convert: Callable) -> Any:
    try:
        return convert(value)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for '{key}': {value!r} ({e})")
