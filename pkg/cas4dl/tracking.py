"""
Per-stage tracking: spans, metrics and structured log lines.
"""
import time
import logging
import json
from typing import Optional

from cas4dl.observability import ExperimentMetrics, classify_error, get_metrics, get_tracer

logger = logging.getLogger(__name__)


class StageTracker:
    """
    Context manager wrapped around one draw/train/evaluate stage.

    Opens a span when tracing is enabled, measures wall time, records stage
    metrics and logs one JSON line on completion. Failures are recorded and
    logged, then re-raised.
    """

    def __init__(
        self,
        method: str,
        trial: int,
        stage: int,
        m: int,
        business_metrics: Optional[ExperimentMetrics] = None,
        tracer=None,
    ):
        self.method = method
        self.trial = trial
        self.stage = stage
        self.m = m
        self.business_metrics = business_metrics if business_metrics is not None else get_metrics()
        self.tracer = tracer if tracer is not None else get_tracer()
        self.duration = 0.0
        self._start_time = 0.0
        self._span_context = None
        self._span = None
        self._outcome = None

    def __enter__(self) -> "StageTracker":
        self._start_time = time.perf_counter()
        if self.tracer:
            self._span_context = self.tracer.start_as_current_span(f"stage {self.method} {self.trial}/{self.stage}")
            self._span = self._span_context.__enter__()
            self._span.set_attribute("cas4dl.method", self.method)
            self._span.set_attribute("cas4dl.trial", self.trial)
            self._span.set_attribute("cas4dl.stage", self.stage)
            self._span.set_attribute("cas4dl.m", self.m)
        return self

    def complete(self, n: int, rel_error: float, alpha_inv: float) -> None:
        """Attach the stage outcome; reported when the block exits."""
        self._outcome = {"n": n, "rel_error": rel_error, "alpha_inv": alpha_inv}

    def _base_log(self) -> dict:
        return {
            "method": self.method,
            "trial": self.trial,
            "stage": self.stage,
            "m": self.m,
            "duration_ms": round(self.duration * 1000, 2),
        }

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.duration = time.perf_counter() - self._start_time

        if exc is not None:
            self.business_metrics.record_error(classify_error(exc), self.method, self.stage)
            error_data = {
                **self._base_log(),
                "error": str(exc),
                "error_type": classify_error(exc),
            }
            logger.error(f"Stage failed - {json.dumps(error_data)}", exc_info=(exc_type, exc, tb))
            if self._span is not None:
                self._span.set_attribute("error", True)
        elif self._outcome is not None:
            self.business_metrics.record_stage(
                self.method,
                self.stage,
                self.duration,
                self._outcome["n"],
                self._outcome["rel_error"],
                self._outcome["alpha_inv"],
            )
            if self._span is not None:
                for key, value in self._outcome.items():
                    self._span.set_attribute(f"cas4dl.{key}", float(value))
            logger.info(f"Stage complete - {json.dumps({**self._base_log(), **self._outcome})}")

        if self._span_context is not None:
            self._span_context.__exit__(exc_type, exc, tb)
        return False
