"""Pydantic models for configs and reports."""
from dotbench.models.schemas import (
    AlphaDivergence,
    ComplexityConfig,
    CostConfig,
    DivergenceField,
    FigureConfig,
    FigurePanel,
    FigureSummary,
    IntrinsicDemoConfig,
    IntrinsicDemoReport,
    MeasureConfig,
    PerturbConfig,
    PolyDualDivergence,
    ProblemConfig,
    RateReport,
    RunConfig,
    SamplerConfig,
    SolverOptions,
    StabilityConfig,
    StabilityReport,
    StabilityRow,
    StrongConvexityConfig,
    StrongConvexityRow,
)

__all__ = [
    "AlphaDivergence",
    "ComplexityConfig",
    "CostConfig",
    "DivergenceField",
    "FigureConfig",
    "FigurePanel",
    "FigureSummary",
    "IntrinsicDemoConfig",
    "IntrinsicDemoReport",
    "MeasureConfig",
    "PerturbConfig",
    "PolyDualDivergence",
    "ProblemConfig",
    "RateReport",
    "RunConfig",
    "SamplerConfig",
    "SolverOptions",
    "StabilityConfig",
    "StabilityReport",
    "StabilityRow",
    "StrongConvexityConfig",
    "StrongConvexityRow",
]
