"""
OpenTelemetry configuration and experiment metrics for cas4dl.
"""
import os
import logging
from opentelemetry import trace, metrics
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter
from opentelemetry.instrumentation.logging import LoggingInstrumentor
from opentelemetry.sdk.resources import Resource

from cas4dl.core.errors import (
    ConfigError,
    TabulatedDataError,
    TrainingDivergenceError,
    TrivialSubspaceError,
)

logger = logging.getLogger(__name__)

# Global instrumentation state
_instrumented = False


def otel_enabled() -> bool:
    """Whether ENABLE_OTEL is set in the current environment."""
    # batch runs rarely have a collector nearby
    return os.getenv("ENABLE_OTEL", "false").lower() == "true"


def setup_otel():
    """Initialize OpenTelemetry tracing, metrics and log correlation."""
    global _instrumented

    if _instrumented or not otel_enabled():
        return

    endpoint = os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT", "")
    resource = Resource.create({
        "service.name": os.getenv("OTEL_SERVICE_NAME", "cas4dl"),
        "service.version": os.getenv("OTEL_SERVICE_VERSION", "0.1.0"),
    })

    trace_provider = TracerProvider(resource=resource)
    if endpoint:
        try:
            otlp_exporter = OTLPSpanExporter(endpoint=endpoint, insecure=True)
            trace_provider.add_span_processor(BatchSpanProcessor(otlp_exporter))
            logger.info(f"OpenTelemetry tracing configured with OTLP endpoint: {endpoint}")
        except Exception as e:
            logger.warning(f"Failed to configure OTLP trace exporter: {e}")
    trace.set_tracer_provider(trace_provider)

    metric_readers = []
    if endpoint:
        try:
            otlp_metric_exporter = OTLPMetricExporter(endpoint=endpoint, insecure=True)
            metric_readers.append(PeriodicExportingMetricReader(otlp_metric_exporter, export_interval_millis=10000))
            logger.info("OTLP metrics exporter configured")
        except Exception as e:
            logger.warning(f"Failed to configure OTLP metrics exporter: {e}")

    if metric_readers:
        metrics.set_meter_provider(MeterProvider(resource=resource, metric_readers=metric_readers))

    LoggingInstrumentor().instrument(set_logging_format=False)

    _instrumented = True
    logger.info("OpenTelemetry instrumentation initialized successfully")


class ExperimentMetrics:
    """Counters and histograms describing sampling stages and trials."""

    def __init__(self):
        if not otel_enabled():
            self.enabled = False
            return

        self.enabled = True
        meter = metrics.get_meter(__name__)

        self.stages_total = meter.create_counter(
            "stages_total",
            description="Completed sampling/training stages by method",
            unit="1"
        )

        self.samples_drawn_total = meter.create_counter(
            "samples_drawn_total",
            description="Grid points drawn by method",
            unit="1"
        )

        self.stage_duration_seconds = meter.create_histogram(
            "stage_duration_seconds",
            description="Wall time of one draw/train/evaluate stage",
            unit="s"
        )

        self.numerical_dimension = meter.create_histogram(
            "numerical_dimension",
            description="Numerical dimension of the learned dictionary",
            unit="1"
        )

        self.alpha_inverse = meter.create_histogram(
            "alpha_inverse",
            description="Reciprocal discrete stability constant",
            unit="1"
        )

        self.relative_l2_error = meter.create_histogram(
            "relative_l2_error",
            description="Relative L2 test error after each stage",
            unit="1"
        )

        self.experiment_errors_total = meter.create_counter(
            "experiment_errors_total",
            description="Failed stages by error type",
            unit="1"
        )

    def record_samples(self, method: str, count: int):
        if self.enabled:
            self.samples_drawn_total.add(count, {"method": method})

    def record_stage(self, method: str, stage: int, duration: float, n: int, rel_error: float, alpha_inv: float):
        """Record the outcome of one completed stage."""
        if self.enabled:
            attributes = {"method": method, "stage": stage}
            self.stages_total.add(1, attributes)
            self.stage_duration_seconds.record(duration, attributes)
            self.numerical_dimension.record(n, attributes)
            self.relative_l2_error.record(rel_error, attributes)
            if alpha_inv != float("inf"):
                self.alpha_inverse.record(alpha_inv, attributes)

    def record_error(self, error_type: str, method: str, stage: int):
        if self.enabled:
            self.experiment_errors_total.add(1, {
                "error_type": error_type,
                "method": method,
                "stage": stage,
            })


def get_metrics():
    """Get an experiment metrics instance bound to the global meter."""
    return ExperimentMetrics()


def get_tracer():
    """Get tracer for stage spans, or None when OpenTelemetry is off."""
    if not otel_enabled():
        return None
    return trace.get_tracer(__name__)


def classify_error(exception):
    """Classify exceptions into stable error-type labels."""
    if isinstance(exception, TrainingDivergenceError):
        return "training_divergence"
    if isinstance(exception, TrivialSubspaceError):
        return "trivial_subspace"
    if isinstance(exception, ConfigError):
        return "config_error"
    if isinstance(exception, TabulatedDataError):
        return "tabulated_error"
    return type(exception).__name__
