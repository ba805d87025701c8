"""
Telemetry service for kdv5-control using OpenTelemetry.

This module traces scenario runs and their phases (generator assembly,
evolution, Gramian assembly, control solves, export). Spans are kept in memory
and summarized to the log; they are also exported over OTLP/HTTP when
KDV5_OTLP_ENDPOINT is set. Timings never reach artifact files.
"""

import logging
import os
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter
from opentelemetry.trace.span import Span

logger = logging.getLogger(__name__)

OTLP_ENDPOINT_ENV = "KDV5_OTLP_ENDPOINT"


def _attribute_value(value: Any) -> Optional[Any]:
    """Coerce a value to an OpenTelemetry attribute type, or None to drop it."""
    if value is None:
        return None
    if isinstance(value, (bool, str, int, float)):
        return value
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        items = [_attribute_value(item) for item in value]
        if all(isinstance(item, (int, float)) and not isinstance(item, bool) for item in items):
            return [float(item) for item in items]
        return [str(item) for item in items]
    return str(value)


class RunTelemetry:
    """Telemetry service for scenario runs."""

    def __init__(self):
        """Initialize the telemetry service."""
        # Set up the tracer provider only if not already set
        if not trace.get_tracer_provider().__class__.__module__.startswith("opentelemetry.sdk"):
            logger.debug("Initializing OpenTelemetry TracerProvider")
            resource = Resource.create({"service.name": "kdv5-control"})
            trace.set_tracer_provider(TracerProvider(resource=resource))
        else:
            logger.debug("Using existing OpenTelemetry TracerProvider")

        self.exporter = InMemorySpanExporter()
        provider = trace.get_tracer_provider()
        provider.add_span_processor(SimpleSpanProcessor(self.exporter))

        endpoint = os.environ.get(OTLP_ENDPOINT_ENV)
        if endpoint:
            try:
                from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter

                provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=endpoint)))
                logger.info(f"Exporting traces to {endpoint}")
            except Exception as e:
                logger.warning(f"Failed to set up OTLP exporter: {e}")

        self.tracer = trace.get_tracer("kdv5_control.telemetry")

    @contextmanager
    def phase(self, name: str, **attributes: Any) -> Iterator[Span]:
        """Trace one phase of a run as a span.

        Args:
            name: Span name, e.g. "gramian" or "evolve"
            **attributes: Numeric or string attributes (K, dt, T, ...)
        """
        with self.tracer.start_as_current_span(name) as span:
            self.record(span, **attributes)
            yield span

    @contextmanager
    def run(self, command: str, **attributes: Any) -> Iterator[Span]:
        """Root span of a scenario run."""
        with self.phase(f"kdv5.{command}", command=command, **attributes) as span:
            yield span
        self.summarize()

    def record(self, span: Span, **attributes: Any) -> None:
        for key, value in attributes.items():
            coerced = _attribute_value(value)
            if coerced is not None:
                span.set_attribute(key, coerced)

    def finished_spans(self) -> List[Dict[str, Any]]:
        spans = []
        for span in self.exporter.get_finished_spans():
            duration = (span.end_time - span.start_time) / 1e6 if span.end_time else None
            spans.append(
                {
                    "name": span.name,
                    "duration_ms": duration,
                    "attributes": dict(span.attributes or {}),
                }
            )
        return spans

    def summarize(self) -> None:
        for span in self.finished_spans():
            logger.debug(f"span {span['name']}: {span['duration_ms']:.1f} ms {span['attributes']}")

    def reset(self) -> None:
        self.exporter.clear()


# Create a singleton instance
telemetry_service = RunTelemetry()
