import numpy as np
import pytest

from nrv2xsim import scenario
from nrv2xsim.config import SimConfig


def test_vehicles_per_lane():
    assert scenario.vehicles_per_lane(5196, 20) == 259
    assert scenario.vehicles_per_lane(5196, 5196) == 1
    assert scenario.vehicles_per_lane(5196, 10) == 519
    with pytest.raises(ValueError):
        scenario.vehicles_per_lane(5196, 0)


def test_ue_per_gnb_formula():
    assert scenario.ue_per_gnb_count(1732, 20, 6) == 86 * 6
    assert scenario.ue_per_gnb_count(1732, 10, 6) == 173 * 6


def _deployment(seed=0, **kwargs):
    cfg = SimConfig(**kwargs)
    return cfg, scenario.generate_deployment(cfg, np.random.default_rng(seed))


def test_deployment_counts():
    cfg, dep = _deployment(ivd_m=20.0)
    assert dep.ue_h == 259 * 6 == dep.num_vehicles
    assert dep.ue_per_gnb == 516
    cfg, dep = _deployment(ivd_m=10.0)
    assert dep.ue_per_gnb == 1038


def test_deployment_degenerate_density():
    _, dep = _deployment(ivd_m=5196.0)
    assert dep.num_vehicles == 6


def test_deployment_grid_spacing_and_lanes():
    cfg, dep = _deployment(seed=3, ivd_m=40.0)
    for lane in range(6):
        xs = np.sort(dep.x_m[dep.lane == lane])
        assert np.allclose(np.diff(xs), cfg.ivd_m)
        assert xs.min() >= 0
        assert xs.max() <= cfg.highway_length_m
        ys = dep.y_m[dep.lane == lane]
        assert np.all(ys == (lane + 0.5) * cfg.lane_width_m)
    assert dep.direction(0) == "east"
    assert dep.direction(dep.num_vehicles - 1) == "west"


def test_every_vehicle_served_once():
    cfg, dep = _deployment(seed=5, ivd_m=20.0)
    counts = np.bincount(dep.serving, minlength=cfg.num_gnb)
    assert counts.sum() == dep.ue_h
    # serving site is the closest one
    site_x = np.array([s.x_m for s in dep.sites])
    site_y = np.array([s.y_m for s in dep.sites])
    d2 = (dep.x_m[:, None] - site_x) ** 2 + (dep.y_m[:, None] - site_y) ** 2
    assert np.array_equal(dep.serving, np.argmin(d2, axis=1))


def test_sites_spacing():
    cfg, dep = _deployment()
    xs = [s.x_m for s in dep.sites]
    assert len(xs) == 3
    assert np.allclose(np.diff(xs), cfg.isd_m)
    assert all(s.height_m == cfg.gnb_height_m for s in dep.sites)


def test_deployment_reproducible():
    _, dep_a = _deployment(seed=11, ivd_m=40.0)
    _, dep_b = _deployment(seed=11, ivd_m=40.0)
    assert np.array_equal(dep_a.x_m, dep_b.x_m)
    assert np.array_equal(dep_a.serving, dep_b.serving)
    _, dep_c = _deployment(seed=12, ivd_m=40.0)
    assert not np.array_equal(dep_a.x_m, dep_c.x_m)


def test_neighbors_brute_force_oracle():
    cfg, dep = _deployment(seed=2, ivd_m=100.0)
    mid = int(np.argmin(np.abs(dep.x_m - cfg.highway_length_m / 2)))
    got = [v.id for v in scenario.neighbors_in_range(dep, mid, 500.0)]
    expected = [
        i
        for i in range(dep.num_vehicles)
        if i != mid
        and (dep.x_m[i] - dep.x_m[mid]) ** 2 + (dep.y_m[i] - dep.y_m[mid]) ** 2
        <= 500.0**2
    ]
    assert got == expected
    assert len(got) > 0


def test_neighbors_symmetry():
    _, dep = _deployment(seed=4, ivd_m=80.0)
    for tx in (0, 57, dep.num_vehicles - 1):
        for v in scenario.neighbors_in_range(dep, tx, 500.0):
            back = scenario.neighbor_ids(dep, v.id, 500.0)
            assert tx in back


def test_neighbors_edge_cases():
    _, dep = _deployment(ivd_m=5196.0, lanes_per_direction=3)
    # zero range sees nobody
    assert scenario.neighbors_in_range(dep, 0, 0.0) == []
    # single vehicle on a short single-lane road
    cfg = SimConfig(highway_length_m=100.0, ivd_m=60.0, lanes_per_direction=1)
    dep = scenario.generate_deployment(cfg, np.random.default_rng(0))
    assert dep.num_vehicles == 2
    one = scenario.neighbors_in_range(dep, 0, 500.0)
    assert [v.id for v in one] == [1]


def test_deployment_csv_dump(tmp_path):
    _, dep = _deployment(ivd_m=1000.0)
    path = tmp_path / "dep.csv"
    with open(path, "w") as f:
        scenario.write_deployment_csv(dep, f)
    lines = path.read_text().splitlines()
    assert lines[0] == "id,lane,direction,x_m,y_m,serving_gnb"
    assert len(lines) == 1 + dep.num_vehicles
    first = lines[1].split(",")
    assert first[0] == "0" and first[2] in ("east", "west")
