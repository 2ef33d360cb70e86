"""Character placement over ground rectangles.

Placement runs in three steps: pick a rectangle with probability
proportional to its area, gather every rectangle whose center lies
within the neighbor radius (boundary inclusive), then rejection-sample
positions uniformly over the union of the selected rectangles subject to
a minimum pairwise separation measured in the horizontal plane. Group
sizes are Poisson around the configured mean, clamped to at least one.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

REJECTION_BUDGET = 10_000


@dataclass(frozen=True)
class SpawnRegion:
    """Axis-aligned ground rectangle; center carries the ground height."""

    center: tuple[float, float, float]  # (x, y, ground z) cm
    half_extents: tuple[float, float]  # (hx, hy) cm

    def __post_init__(self):
        if min(self.half_extents) <= 0:
            raise ValueError("half extents must be positive")

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]

    def contains(self, point) -> bool:
        x, y = point[0], point[1]
        cx, cy, _ = self.center
        hx, hy = self.half_extents
        return (cx - hx <= x <= cx + hx) and (cy - hy <= y <= cy + hy)


@dataclass(frozen=True)
class SpawnConfig:
    neighbor_radius_cm: float = 1000.0  # 10 m
    min_separation_cm: float = 100.0  # 1 m
    group_size_mean: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if not self.min_separation_cm < self.neighbor_radius_cm:
            raise ValueError("min separation must be below the neighbor radius")
        if self.group_size_mean < 1:
            raise ValueError("group size mean must be >= 1")


def pick_region(regions: list[SpawnRegion], rng: np.random.Generator) -> int:
    """Index i with probability area_i / sum(areas)."""
    if not regions:
        raise ValueError("no regions to pick from")
    areas = np.array([r.area for r in regions])
    return int(rng.choice(len(regions), p=areas / areas.sum()))


def select_neighbors(
    regions: list[SpawnRegion], i: int, radius: float
) -> list[int]:
    """All indices (i included) whose centers lie within `radius` of C_i."""
    ci = np.asarray(regions[i].center)
    out = []
    for t, region in enumerate(regions):
        if np.linalg.norm(np.asarray(region.center) - ci) <= radius:
            out.append(t)
    return out


@dataclass
class SampleResult:
    positions: np.ndarray  # (n, 3): x, y, ground z
    attempts: int
    saturated: bool  # budget exhausted before reaching the request


def sample_positions(
    regions: list[SpawnRegion],
    n: int,
    min_sep: float,
    rng: np.random.Generator,
) -> SampleResult:
    """Rejection-sample up to n positions uniform over the rectangle union.

    Pairwise horizontal distances stay >= min_sep. Returns fewer than n
    positions only once the attempt budget is exhausted.
    """
    if not regions:
        raise ValueError("no regions selected")
    if n < 1:
        raise ValueError("need n >= 1")
    areas = np.array([r.area for r in regions])
    weights = areas / areas.sum()
    accepted: list[np.ndarray] = []
    attempts = 0
    while len(accepted) < n and attempts < REJECTION_BUDGET:
        attempts += 1
        k = int(rng.choice(len(regions), p=weights))
        cx, cy, cz = regions[k].center
        hx, hy = regions[k].half_extents
        candidate = np.array(
            [rng.uniform(cx - hx, cx + hx), rng.uniform(cy - hy, cy + hy), cz]
        )
        ok = all(
            np.hypot(candidate[0] - p[0], candidate[1] - p[1]) >= min_sep
            for p in accepted
        )
        if ok:
            accepted.append(candidate)
    positions = (
        np.stack(accepted) if accepted else np.zeros((0, 3), dtype=np.float64)
    )
    return SampleResult(
        positions=positions, attempts=attempts, saturated=len(accepted) < n
    )


@dataclass(frozen=True)
class Placement:
    position: tuple[float, float, float]  # sampled ground point
    z_offset: float  # raises the character so its lowest point meets the ground


@dataclass
class PlacementResult:
    placements: list[Placement]
    region_index: int
    neighbor_indices: list[int]
    saturated: bool


def place_characters(
    regions: list[SpawnRegion],
    config: SpawnConfig,
    character_lowest_z: list[float],
    rng: np.random.Generator,
) -> PlacementResult:
    """Pick a region, gather neighbors, sample a group, adjust heights.

    `character_lowest_z` gives each character's lowest vertex height in
    its local frame (cm); characters are assigned cyclically when the
    group is larger than the list.
    """
    if not character_lowest_z:
        raise ValueError("need at least one character profile")
    i = pick_region(regions, rng)
    neighbors = select_neighbors(regions, i, config.neighbor_radius_cm)
    n = max(1, int(rng.poisson(config.group_size_mean)))
    sample = sample_positions(
        [regions[t] for t in neighbors], n, config.min_separation_cm, rng
    )
    placements = []
    for k, pos in enumerate(sample.positions):
        lowest = character_lowest_z[k % len(character_lowest_z)]
        placements.append(
            Placement(position=tuple(pos), z_offset=pos[2] - lowest)
        )
    return PlacementResult(
        placements=placements,
        region_index=i,
        neighbor_indices=neighbors,
        saturated=sample.saturated,
    )


def load_scene(path) -> list[SpawnRegion]:
    """Scene file: a YAML list of {center: [x, y, z], half_extents: [hx, hy]}."""
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"scene file {path} must hold a non-empty list")
    return [
        SpawnRegion(
            center=tuple(float(v) for v in entry["center"]),
            half_extents=tuple(float(v) for v in entry["half_extents"]),
        )
        for entry in raw
    ]


def save_scene(path, regions: list[SpawnRegion]) -> None:
    Path(path).write_text(
        yaml.safe_dump(
            [
                {
                    "center": list(r.center),
                    "half_extents": list(r.half_extents),
                }
                for r in regions
            ],
            sort_keys=True,
        )
    )
