import numpy as np
import pytest

from mavrecon.grid import (FREE, OCCUPIED, UNKNOWN, OccupancyGrid, read_pgm,
                           write_pgm)


def test_classification_thresholds():
    g = OccupancyGrid.empty(3, 1, 0.1)
    # logit(0.25) ~ -1.0986, logit(0.65) ~ 0.6190
    g.logodds[0] = [-1.2, 0.0, 0.7]
    cls = g.classify()
    assert cls[0, 0] == FREE
    assert cls[0, 1] == UNKNOWN
    assert cls[0, 2] == OCCUPIED


def test_thresholds_are_strict():
    g = OccupancyGrid.empty(2, 1, 0.1)
    g.logodds[0] = [np.log(0.25 / 0.75), np.log(0.65 / 0.35)]
    cls = g.classify()
    # exactly p=0.25 and p=0.65 are unknown (p < 0.25 free, p > 0.65 occupied)
    assert cls[0, 0] == UNKNOWN
    assert cls[0, 1] == UNKNOWN


def test_clamp_bound_holds_under_many_updates():
    g = OccupancyGrid.empty(4, 4, 0.05)
    rng = np.random.default_rng(3)
    for _ in range(200):
        g.logodds += rng.normal(0, 3.0, g.logodds.shape).astype(np.float32)
        g.clamp()
        assert g.logodds.max() <= g.l_max + 1e-6
        assert g.logodds.min() >= g.l_min - 1e-6


def test_world_cell_round_trip():
    g = OccupancyGrid.empty(20, 10, 0.25, origin=(-1.0, 2.0))
    r, c = g.world_to_cell(-0.99, 2.01)
    assert (r, c) == (0, 0)
    x, y = g.cell_to_world(0, 0)
    assert x == pytest.approx(-0.875)
    assert y == pytest.approx(2.125)
    r, c = g.world_to_cell(x, y)
    assert (r, c) == (0, 0)


def test_invalid_resolution_rejected():
    with pytest.raises(ValueError):
        OccupancyGrid.empty(4, 4, 0.0)


def test_pgm_round_trip_binary_and_ascii(tmp_path):
    occupied = np.zeros((6, 9), dtype=bool)
    occupied[0, :] = True
    occupied[3, 4] = True
    g = OccupancyGrid.from_occupancy(occupied, 0.1)
    for binary in (True, False):
        path = tmp_path / f"map_{binary}.pgm"
        write_pgm(g, path, binary=binary)
        img = read_pgm(path)
        assert img.shape == (6, 9)
        img = np.flipud(img)
        assert np.all(img[occupied] == 0)
        assert np.all(img[~occupied] == 254)


def test_pgm_with_comment_and_unknown(tmp_path):
    g = OccupancyGrid.empty(2, 2, 0.1)
    g.logodds[:] = [[-5, 5], [0, 0]]
    path = tmp_path / "m.pgm"
    write_pgm(g, path)
    data = path.read_bytes()
    injected = data.replace(b"P5\n", b"P5\n# a comment\n")
    path.write_bytes(injected)
    img = np.flipud(read_pgm(path))
    assert img[0, 0] == 254 and img[0, 1] == 0
    assert img[1, 0] == 205 and img[1, 1] == 205


def test_malformed_pgm_rejected(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P5\n3 3\n255\nxx")
    with pytest.raises(ValueError):
        read_pgm(path)
    path.write_bytes(b"P7\n1 1\n255\n\x00")
    with pytest.raises(ValueError):
        read_pgm(path)
