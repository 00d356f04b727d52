"""
Run Logger - Hệ thống logging cho training và evaluation của OvA-INN
"""
import logging
import os
from datetime import datetime
from typing import Optional, Dict, Any
import json

from dotenv import load_dotenv


load_dotenv()


def _default_log_dir() -> Optional[str]:
    """OVAINN_LOG_DIR, chuỗi rỗng = tắt file logging"""
    value = os.getenv("OVAINN_LOG_DIR", "logs")
    return value or None


class RunLogger:
    """
    Logger chuyên dụng cho OvA-INN

    Features:
    - Console output on stderr (stdout stays machine-parseable)
    - Optional daily file logs + error file
    - Epoch / class / evaluation formatting
    - Structured extra data dumped as JSON
    """

    def __init__(self, name: str, log_dir: Optional[str] = "default"):
        self.name = name
        self.log_dir = _default_log_dir() if log_dir == "default" else log_dir
        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        """Thiết lập logger"""
        logger = logging.getLogger(f"ovainn.{self.name}")
        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        # Tránh duplicate handlers
        if logger.handlers:
            return logger

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        level_name = os.getenv("OVAINN_LOG_LEVEL", "INFO").upper()
        console_handler = logging.StreamHandler()  # stderr
        console_handler.setLevel(getattr(logging, level_name, logging.INFO))
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if self.log_dir:
            os.makedirs(self.log_dir, exist_ok=True)
            today = datetime.now().strftime('%Y-%m-%d')

            file_handler = logging.FileHandler(
                os.path.join(self.log_dir, f'ovainn_{today}.log')
            )
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

            error_handler = logging.FileHandler(
                os.path.join(self.log_dir, f'errors_{today}.log')
            )
            error_handler.setLevel(logging.ERROR)
            error_handler.setFormatter(formatter)
            logger.addHandler(error_handler)

        return logger

    def debug(self, message: str, extra: Optional[Dict] = None):
        """Debug level logging"""
        self._log(logging.DEBUG, message, extra)

    def info(self, message: str, extra: Optional[Dict] = None):
        """Info level logging"""
        self._log(logging.INFO, message, extra)

    def warning(self, message: str, extra: Optional[Dict] = None):
        """Warning level logging"""
        self._log(logging.WARNING, message, extra)

    def error(self, message: str, extra: Optional[Dict] = None):
        """Error level logging"""
        self._log(logging.ERROR, message, extra)

    def critical(self, message: str, extra: Optional[Dict] = None):
        """Critical level logging"""
        self._log(logging.CRITICAL, message, extra)

    def epoch_log(self, class_id: Optional[int], epoch: int, loss: float, lr: float, **kwargs):
        """Log một epoch (DEBUG, rất nhiều dòng)"""
        message = f"EPOCH: class={class_id} epoch={epoch} loss={loss:.6f} lr={lr:.2e}"
        self.debug(message, {'epoch_data': kwargs} if kwargs else None)

    def class_log(self, class_id: Optional[int], n_samples: int,
                  initial_loss: float, final_loss: float, **kwargs):
        """Log kết thúc train một class"""
        class_data = {
            'class_id': class_id,
            'n_samples': n_samples,
            'initial_loss': initial_loss,
            'final_loss': final_loss,
            **kwargs
        }
        message = (
            f"CLASS: {class_id} trained on {n_samples} samples - "
            f"loss {initial_loss:.4f} -> {final_loss:.4f}"
        )
        self.info(message, {'class_data': class_data} if kwargs else None)

    def eval_log(self, classes_seen: int, accuracy: float, mode: str, **kwargs):
        """Log một điểm của accuracy curve"""
        message = f"EVAL: {mode} classes_seen={classes_seen} accuracy={accuracy * 100:.2f}%"
        self.info(message, {'eval_data': kwargs} if kwargs else None)

    def performance_log(self, metrics: Dict[str, Any]):
        """Log metrics dạng key: value"""
        message = "PERFORMANCE: " + " | ".join([
            f"{k}: {v}" for k, v in metrics.items()
        ])
        self.info(message, {'performance_data': metrics})

    def _log(self, level: int, message: str, extra: Optional[Dict] = None):
        """Internal logging method"""
        if extra:
            extra_str = json.dumps(extra, indent=2, default=str)
            full_message = f"{message}\nExtra: {extra_str}"
        else:
            full_message = message

        self.logger.log(level, full_message)
