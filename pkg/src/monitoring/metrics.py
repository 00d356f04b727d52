"""
Training Metrics - theo dõi loss từng class và accuracy curve
"""
from datetime import datetime
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ..models import TrainingSummary
from .logger import RunLogger


class TrainingMetrics:
    """
    Theo dõi quá trình học class-by-class

    Features:
    - Per-class initial/final loss, lr halvings, wall time
    - Accuracy curve (classes_seen, accuracy)
    - Text report + CSV export (pandas)
    """

    def __init__(self):
        self.logger = RunLogger("Metrics")
        self.summaries: List[TrainingSummary] = []
        self.curve: List[Tuple[int, float]] = []
        self.start_time = datetime.now()

    def record(self, summary: TrainingSummary):
        """Lưu summary mà không log (caller đã log)"""
        self.summaries.append(summary)

    def add_training(self, summary: TrainingSummary):
        """Thêm kết quả train một class"""
        self.record(summary)
        self.logger.class_log(
            summary.class_id,
            summary.n_samples,
            summary.initial_loss,
            summary.final_loss,
            lr_halvings=summary.lr_halvings,
            seconds=round(summary.seconds, 3),
        )

    def add_eval_point(self, classes_seen: int, accuracy: float):
        """Một điểm của accuracy curve (evaluate đã log)"""
        self.curve.append((classes_seen, accuracy))

    def to_frame(self) -> pd.DataFrame:
        """Một dòng mỗi class, theo thứ tự học"""
        rows = [{
            'class_id': s.class_id,
            'n_samples': s.n_samples,
            'epochs': len(s.epoch_losses),
            'initial_loss': s.initial_loss,
            'final_loss': s.final_loss,
            'lr_halvings': s.lr_halvings,
            'final_lr': s.learning_rates[-1] if s.learning_rates else None,
            'reverted_to_initial': s.reverted_to_initial,
        } for s in self.summaries]
        columns = ['class_id', 'n_samples', 'epochs', 'initial_loss', 'final_loss',
                   'lr_halvings', 'final_lr', 'reverted_to_initial']
        return pd.DataFrame(rows, columns=columns)

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.curve, columns=['classes_seen', 'accuracy'])

    def summary(self) -> Dict:
        if not self.summaries:
            return {'classes': 0}
        frame = self.to_frame()
        data = {
            'classes': len(self.summaries),
            'mean_final_loss': float(frame['final_loss'].mean()),
            'total_seconds': round(sum(s.seconds for s in self.summaries), 2),
        }
        if self.curve:
            data['final_accuracy'] = self.curve[-1][1]
        return data

    def get_report(self) -> str:
        """Báo cáo dạng text"""
        lines = [
            f"📊 TRAINING REPORT - started {self.start_time.strftime('%Y-%m-%d %H:%M:%S')}",
            '=' * 60,
        ]
        for s in self.summaries:
            flag = " (reverted)" if s.reverted_to_initial else ""
            lines.append(
                f"class {s.class_id}: {s.n_samples} samples | loss {s.initial_loss:.4f} -> "
                f"{s.final_loss:.4f} ({s.loss_reduction * 100:.1f}% lower) | "
                f"halvings {s.lr_halvings} | {s.seconds:.1f}s{flag}"
            )
        for classes_seen, accuracy in self.curve:
            lines.append(f"after {classes_seen} classes: accuracy {accuracy * 100:.2f}%")
        return "\n".join(lines)

    def export_csv(self, filename: str) -> Optional[str]:
        """Export per-class training summary ra CSV"""
        if not self.summaries:
            self.logger.warning("Không có training summary để export")
            return None
        self.to_frame().to_csv(filename, index=False)
        self.logger.info(f"Exported {len(self.summaries)} class summaries to {filename}")
        return filename
