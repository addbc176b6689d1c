"""Runtime settings loaded from environment variables."""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings


class RuntimeSettings(BaseSettings):
    """Process-level knobs: log verbosity and OTLP export.

    Study parameters never come from the environment; they live in the
    study file passed on the command line.
    """

    model_config = {"env_prefix": ""}

    log_level: str = Field(default="INFO", description="Root log level")
    otel_exporter_otlp_endpoint: str | None = Field(
        default=None, description="OTLP collector endpoint; telemetry is off when unset"
    )
    otel_exporter_otlp_protocol: Literal["grpc", "http/protobuf"] = Field(
        default="grpc", description="OTLP wire protocol"
    )
    otel_service_name: str = Field(default="emt-lab", description="service.name resource")
