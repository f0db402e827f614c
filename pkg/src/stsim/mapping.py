"""Dataflows and tile decomposition of MM stages on the systolic array."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

from .config import ArrayConfig
from .workload import StageSpec

STATIONARITIES = ("IS", "WS", "OS")
OUTER_DIMS = ("B", "C", "K")

# Spatial (D1, D2) pairs per phase, in forward-pass labels.
_SPATIAL = {
    "FP": {"IS": ("B", "C"), "WS": ("C", "K"), "OS": ("B", "K")},
    "BP": {"IS": ("B", "K"), "WS": ("C", "K"), "OS": ("B", "C")},
    "WG": {"IS": ("B", "C"), "WS": ("B", "K"), "OS": ("C", "K")},
}


@dataclass(frozen=True)
class Dataflow:
    stationarity: str
    outer_dim: str

    def __post_init__(self):
        if self.stationarity not in STATIONARITIES or self.outer_dim not in OUTER_DIMS:
            raise ValueError(f"unknown dataflow {self.stationarity}_{self.outer_dim}")

    @property
    def name(self) -> str:
        return f"{self.stationarity}_{self.outer_dim}"

    @classmethod
    def parse(cls, name: str) -> "Dataflow":
        try:
            stat, dim = name.split("_")
        except ValueError:
            raise ValueError(f"unknown dataflow {name!r}") from None
        return cls(stat, dim)


def enumerate_dataflows() -> list[Dataflow]:
    return [Dataflow(s, d) for s in STATIONARITIES for d in OUTER_DIMS]


@lru_cache(maxsize=None)
def dataflow_names() -> tuple[str, ...]:
    return tuple(df.name for df in enumerate_dataflows())


def spatial_assignment(phase: str, stationarity: str) -> tuple[str, str]:
    """(D1, D2) in forward-pass dimension labels; the third label is streamed."""
    return _SPATIAL[phase][stationarity]


@dataclass(frozen=True)
class TilingPlan:
    stage: StageSpec
    dataflow: Dataflow
    spatial_dims: tuple[str, str]  # local axes on (rows, cols)
    stream_dim: str
    tiles_row: int
    tiles_col: int
    outer_order: tuple[str, ...]  # local axes, outermost first

    def extent(self, axis: str) -> int:
        return self.stage.dims["BCK".index(axis)]

    @property
    def stream_extent(self) -> int:
        return self.extent(self.stream_dim)

    @property
    def tile_count(self) -> int:
        return self.tiles_row * self.tiles_col

    def tiles_along(self, axis: str) -> int:
        """Tile count along a local axis; the streamed axis is never tiled."""
        if axis == self.spatial_dims[0]:
            return self.tiles_row
        if axis == self.spatial_dims[1]:
            return self.tiles_col
        return 1

    @property
    def outer_trips(self) -> int:
        return self.tiles_along(self.dataflow.outer_dim)


def map_stage(stage: StageSpec, df: Dataflow, arr: ArrayConfig) -> TilingPlan:
    if not stage.is_mm:
        raise ValueError(f"{stage.label}: element-wise stages bypass the array")
    roles = stage.roles
    d1, d2 = ("BCK"[roles.index(lbl)] for lbl in spatial_assignment(stage.phase, df.stationarity))
    stream = next(a for a in "BCK" if a not in (d1, d2))
    dims = dict(zip("BCK", stage.dims))
    # C is the contracted axis in every phase, so outer_dim is read locally
    outer = df.outer_dim
    order = (outer,) + tuple(a for a in (d1, d2, stream) if a != outer)
    return TilingPlan(
        stage=stage,
        dataflow=df,
        spatial_dims=(d1, d2),
        stream_dim=stream,
        tiles_row=ceil(dims[d1] / arr.D_row),
        tiles_col=ceil(dims[d2] / arr.D_col),
        outer_order=order,
    )
