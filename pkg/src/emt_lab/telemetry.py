"""Structured logging and optional OTLP export for lab runs.

Logs go to stderr so that command output on stdout stays machine-readable.
Export is off unless ``OTEL_EXPORTER_OTLP_ENDPOINT`` is set; a run then ships
its spans (meshing, factorization, solves, study cases), the instruments of
:mod:`emt_lab.metrics` and every log event to the collector.
"""

from __future__ import annotations

import importlib
import logging
import os
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any

import structlog
from opentelemetry import metrics, trace
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from emt_lab.config.settings import RuntimeSettings

_log = structlog.get_logger()

OTEL_LOGGER_NAME = "emt-lab"

_EXPORTER_PACKAGES = {
    "grpc": "opentelemetry.exporter.otlp.proto.grpc",
    "http/protobuf": "opentelemetry.exporter.otlp.proto.http",
}

# Attributes every stdlib record carries, plus the keys structlog adds itself
_RECORD_KEYS = frozenset(vars(logging.makeLogRecord({}))) | {
    "event",
    "level",
    "timestamp",
    "message",
}

_QUIET_LOGGERS = (
    "opentelemetry.exporter.otlp.proto.grpc",
    "opentelemetry.sdk.trace.export",
    "opentelemetry.sdk.metrics.export",
    "opentelemetry.sdk._logs.export",
)


@dataclass
class _Providers:
    tracer: TracerProvider | None = None
    meter: MeterProvider | None = None
    logs: Any = None
    forward_logs: bool = False

    @property
    def active(self) -> bool:
        return self.tracer is not None


_providers = _Providers()


# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------


def configure_logging(settings: RuntimeSettings | None = None) -> None:
    """Set up structlog processors and route stdlib logging through them."""
    os.environ.setdefault("GRPC_VERBOSITY", "ERROR")
    settings = settings or RuntimeSettings()
    level = logging.getLevelNamesMapping().get(settings.log_level.upper(), logging.INFO)
    renderer = structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty())
    shared: list[Any] = [
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        add_trace_context,
    ]

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            *shared,
            emit_to_otel_logs,
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(sys.stderr),
        cache_logger_on_first_use=False,
    )

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(
        structlog.stdlib.ProcessorFormatter(processor=renderer, foreign_pre_chain=shared)
    )
    root = logging.getLogger()
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(level)
    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.ERROR)


def add_trace_context(logger: Any, method: str, event_dict: dict[str, Any]) -> dict[str, Any]:
    """Structlog processor adding ``trace_id`` and ``span_id`` of the active span."""
    ctx = trace.get_current_span().get_span_context()
    if ctx.trace_id:
        event_dict["trace_id"] = format(ctx.trace_id, "032x")
        event_dict["span_id"] = format(ctx.span_id, "016x")
    return event_dict


def emit_to_otel_logs(logger: Any, method: str, event_dict: dict[str, Any]) -> dict[str, Any]:
    """Structlog processor copying each event to the OTLP log handler.

    The event always continues to the console renderer.
    """
    if not _providers.forward_logs:
        return event_dict
    level = logging.getLevelNamesMapping().get(
        str(event_dict.get("level", "info")).upper(), logging.INFO
    )
    extra = {k: v for k, v in event_dict.items() if k not in _RECORD_KEYS}
    logging.getLogger(OTEL_LOGGER_NAME).log(level, event_dict.get("event", ""), extra=extra)
    return event_dict


# ---------------------------------------------------------------------------
# OTLP export
# ---------------------------------------------------------------------------


def create_exporters(protocol: str = "grpc") -> tuple[Any, Any, Any]:
    """Span, metric and log exporters speaking *protocol*."""
    package = _EXPORTER_PACKAGES.get(protocol, _EXPORTER_PACKAGES["grpc"])
    span = importlib.import_module(f"{package}.trace_exporter").OTLPSpanExporter()
    metric = importlib.import_module(f"{package}.metric_exporter").OTLPMetricExporter()
    log = importlib.import_module(f"{package}._log_exporter").OTLPLogExporter()
    return span, metric, log


def init_telemetry(settings: RuntimeSettings | None = None) -> bool:
    """Install OTLP tracer, meter and log providers.

    Returns whether export is active; without an endpoint nothing is installed.
    """
    settings = settings or RuntimeSettings()
    endpoint = settings.otel_exporter_otlp_endpoint
    if not endpoint:
        return False
    if _providers.active:
        return True

    from opentelemetry._logs import set_logger_provider  # noqa: PLC0415
    from opentelemetry.sdk._logs import LoggerProvider, LoggingHandler  # noqa: PLC0415
    from opentelemetry.sdk._logs.export import BatchLogRecordProcessor  # noqa: PLC0415
    from opentelemetry.sdk.resources import Resource  # noqa: PLC0415

    resource = Resource.create({"service.name": settings.otel_service_name})
    span_exporter, metric_exporter, log_exporter = create_exporters(
        settings.otel_exporter_otlp_protocol
    )

    tracer_provider = TracerProvider(resource=resource)
    tracer_provider.add_span_processor(BatchSpanProcessor(span_exporter))
    trace.set_tracer_provider(tracer_provider)

    meter_provider = MeterProvider(
        metric_readers=[PeriodicExportingMetricReader(metric_exporter)], resource=resource
    )
    metrics.set_meter_provider(meter_provider)

    log_provider = LoggerProvider(resource=resource)
    log_provider.add_log_record_processor(BatchLogRecordProcessor(log_exporter))
    set_logger_provider(log_provider)
    otel_logger = logging.getLogger(OTEL_LOGGER_NAME)
    otel_logger.addHandler(LoggingHandler(logger_provider=log_provider))
    otel_logger.setLevel(logging.DEBUG)
    otel_logger.propagate = False

    _providers.tracer = tracer_provider
    _providers.meter = meter_provider
    _providers.logs = log_provider
    _providers.forward_logs = True
    _log.info("otel_configured", endpoint=endpoint, protocol=settings.otel_exporter_otlp_protocol)
    return True


def shutdown_telemetry() -> None:
    """Flush and close whatever :func:`init_telemetry` installed."""
    _providers.forward_logs = False
    if _providers.tracer is not None:
        _providers.tracer.shutdown()
    if _providers.meter is not None:
        _providers.meter.shutdown()
    if _providers.logs is not None:
        _providers.logs.shutdown()
    _providers.tracer = _providers.meter = _providers.logs = None


@contextmanager
def telemetry_session(settings: RuntimeSettings | None = None) -> Iterator[bool]:
    """Export telemetry for the duration of one command."""
    try:
        yield init_telemetry(settings)
    finally:
        shutdown_telemetry()


def get_tracer(name: str) -> trace.Tracer:
    """Tracer from the current provider."""
    return trace.get_tracer(name)
