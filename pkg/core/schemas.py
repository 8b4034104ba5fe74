"""Pydantic schemas for run inputs and reports."""

from typing import Any, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, model_validator

RationalString = Union[str, int, float]


class MeasurePayload(BaseModel):
    """Atomic joint measure on R^n: ``{"n", "atoms", "weights"}``."""
    n: int = Field(ge=1)
    atoms: list[list[RationalString]]
    weights: list[RationalString]

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.atoms) != len(self.weights):
            raise ValueError(f"{len(self.atoms)} atoms but {len(self.weights)} weights")
        for atom in self.atoms:
            if len(atom) != self.n:
                raise ValueError(f"atom {atom} does not have {self.n} coordinates")
        return self


class MatrixPayload(BaseModel):
    """Dense complex matrix: ``{"rows", "cols", "re", "im"}``; ``im`` may be omitted."""
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    re: list[list[RationalString]]
    im: Optional[list[list[RationalString]]] = None

    @model_validator(mode="after")
    def _check_shape(self):
        for name in ("re", "im"):
            block = getattr(self, name)
            if block is None:
                continue
            if len(block) != self.rows or any(len(r) != self.cols for r in block):
                raise ValueError(f"'{name}' is not {self.rows}x{self.cols}")
        return self


class VerticesPayload(BaseModel):
    """Vertex set of a convex polytope: ``{"n", "vertices"}``."""
    n: int = Field(ge=1)
    vertices: list[list[RationalString]]


class SequencePayload(BaseModel):
    """Finite diagonal target: ``{"n", "entries"}``."""
    n: int = Field(ge=1)
    entries: list[list[RationalString]]


class PhiPayload(BaseModel):
    """Vertex assignment for an index check, 0-based: ``{"phi"}``."""
    phi: list[int]


class RunReport(BaseModel):
    """One command's machine-readable outcome."""
    model_config = ConfigDict(extra="forbid")

    subcommand: str
    inputs_digest: str
    backend: str
    verdicts: dict[str, Any] = Field(default_factory=dict)
    achieved: dict[str, Any] = Field(default_factory=dict)
    max_errors: dict[str, Any] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)
    wall_time: Optional[float] = None
    exit_code: int = 0
