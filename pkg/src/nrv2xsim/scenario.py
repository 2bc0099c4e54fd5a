"""Highway deployment: vehicle placement, gNB sites, serving cells.

Vehicles sit on a regular grid with the configured inter-vehicle spacing;
each lane gets one uniform random phase offset so Monte Carlo drops differ
while the spacing stays exact.  The snapshot is static: speed plays no
role in any reception formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .config import SimConfig


@dataclass(frozen=True)
class Vehicle:
    id: int
    lane: int
    direction: str          # "east" | "west"
    x_m: float
    y_m: float


@dataclass(frozen=True)
class GnbSite:
    id: int
    x_m: float
    y_m: float
    height_m: float


@dataclass(frozen=True, eq=False)
class Deployment:
    """One drop's static topology, stored as arrays indexed by vehicle id."""

    x_m: np.ndarray
    y_m: np.ndarray
    lane: np.ndarray
    serving: np.ndarray     # site index per vehicle
    sites: tuple[GnbSite, ...]
    lanes_per_direction: int
    ue_h: int               # total vehicles on the highway
    ue_per_gnb: int         # per-cell population by the spacing formula

    @property
    def num_vehicles(self) -> int:
        return self.x_m.size

    def direction(self, vehicle_id: int) -> str:
        return "east" if self.lane[vehicle_id] < self.lanes_per_direction else "west"

    def vehicle(self, vehicle_id: int) -> Vehicle:
        return Vehicle(
            id=int(vehicle_id),
            lane=int(self.lane[vehicle_id]),
            direction=self.direction(vehicle_id),
            x_m=float(self.x_m[vehicle_id]),
            y_m=float(self.y_m[vehicle_id]),
        )

    @property
    def vehicles(self) -> list[Vehicle]:
        return [self.vehicle(i) for i in range(self.num_vehicles)]

    def served_count(self, site_id: int) -> int:
        return int(np.count_nonzero(self.serving == site_id))


def vehicles_per_lane(length_m: float, ivd_m: float) -> int:
    """Vehicles that fit in one lane at the given spacing."""
    if length_m <= 0 or ivd_m <= 0:
        raise ValueError("length_m and ivd_m must be positive")
    return math.floor(length_m / ivd_m)


def ue_per_gnb_count(isd_m: float, ivd_m: float, num_lanes: int) -> int:
    """Per-cell vehicle population implied by the site and vehicle spacing."""
    return math.floor(isd_m / ivd_m) * num_lanes


def generate_deployment(cfg: "SimConfig", rng: np.random.Generator) -> Deployment:
    num_lanes = 2 * cfg.lanes_per_direction
    per_lane = vehicles_per_lane(cfg.highway_length_m, cfg.ivd_m)
    offsets = rng.random(num_lanes) * cfg.ivd_m  # one phase per lane

    lane = np.repeat(np.arange(num_lanes), per_lane)
    slot = np.tile(np.arange(per_lane), num_lanes)
    x = offsets[lane] + slot * cfg.ivd_m
    y = (lane + 0.5) * cfg.lane_width_m

    median_y = cfg.lanes_per_direction * cfg.lane_width_m
    sites = tuple(
        GnbSite(
            id=k,
            x_m=(k + 0.5) * cfg.isd_m,
            y_m=median_y,
            height_m=cfg.gnb_height_m,
        )
        for k in range(cfg.num_gnb)
    )
    site_x = np.array([s.x_m for s in sites])
    site_y = np.array([s.y_m for s in sites])
    d2 = (x[:, None] - site_x[None, :]) ** 2 + (y[:, None] - site_y[None, :]) ** 2
    serving = np.argmin(d2, axis=1)

    return Deployment(
        x_m=x,
        y_m=y,
        lane=lane,
        serving=serving,
        sites=sites,
        lanes_per_direction=cfg.lanes_per_direction,
        ue_h=per_lane * num_lanes,
        ue_per_gnb=ue_per_gnb_count(cfg.isd_m, cfg.ivd_m, num_lanes),
    )


def neighbor_ids(dep: Deployment, tx_id: int, range_m: float) -> np.ndarray:
    """Ids of all other vehicles within Euclidean range, ascending."""
    dx = dep.x_m - dep.x_m[tx_id]
    dy = dep.y_m - dep.y_m[tx_id]
    mask = dx * dx + dy * dy <= float(range_m) ** 2
    mask[tx_id] = False
    return np.flatnonzero(mask)


def neighbors_in_range(dep: Deployment, tx, range_m: float) -> list[Vehicle]:
    """Vehicle objects within range of tx (a Vehicle or a vehicle id)."""
    tx_id = tx.id if isinstance(tx, Vehicle) else int(tx)
    return [dep.vehicle(i) for i in neighbor_ids(dep, tx_id, range_m)]


def write_deployment_csv(dep: Deployment, handle) -> None:
    handle.write("id,lane,direction,x_m,y_m,serving_gnb\n")
    for i in range(dep.num_vehicles):
        handle.write(
            f"{i},{int(dep.lane[i])},{dep.direction(i)},"
            f"{dep.x_m[i]:.3f},{dep.y_m[i]:.3f},{int(dep.serving[i])}\n"
        )
