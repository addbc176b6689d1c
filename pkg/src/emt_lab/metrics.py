"""Shared OTel metrics instruments for the lab."""

from opentelemetry import metrics

METER_NAME = "emt_lab"

meter = metrics.get_meter(METER_NAME)

# Meshing
meshes_generated_total = meter.create_counter(
    name="meshes_generated_total",
    description="Total meshes generated",
    unit="1",
)

mesh_nodes = meter.create_histogram(
    name="mesh_nodes",
    description="Vertex count of generated meshes",
    unit="1",
)

# Linear algebra
factorizations_total = meter.create_counter(
    name="factorizations_total",
    description="Total constrained-system factorizations",
    unit="1",
)

factorization_duration = meter.create_histogram(
    name="factorization_duration_seconds",
    description="Duration of sparse LU factorization",
    unit="s",
)

linear_solves_total = meter.create_counter(
    name="linear_solves_total",
    description="Total back-substitutions against a factorized system",
    unit="1",
)

# Studies
study_cases_total = meter.create_counter(
    name="study_cases_total",
    description="Total convergence-study cases run, by outcome",
    unit="1",
)

study_case_duration = meter.create_histogram(
    name="study_case_duration_seconds",
    description="Duration of one convergence-study case",
    unit="s",
)
