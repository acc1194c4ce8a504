import json
import os

import numpy as np
import pytest

from scripts import config, utils


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_out_of_range(seed):
    with pytest.raises(ValueError):
        utils.check_seed(seed)


@pytest.mark.parametrize("seed", [1.0, "1", True])
def test_seed_type(seed):
    with pytest.raises(TypeError):
        utils.check_seed(seed)


def test_streams_are_reproducible():
    a = utils.make_rng(42, 3).standard_normal(10)
    b = utils.make_rng(42, 3).standard_normal(10)
    np.testing.assert_array_equal(a, b)


def test_streams_and_domains_differ():
    base = utils.make_rng(42, 3).standard_normal(10)
    assert not np.array_equal(base, utils.make_rng(42, 4).standard_normal(10))
    assert not np.array_equal(base, utils.make_rng(43, 3).standard_normal(10))
    other = utils.make_rng(42, 3, config.RNG_DOMAIN_SURVIVAL).standard_normal(10)
    assert not np.array_equal(base, other)


def test_rms_about():
    assert utils.rms_about(np.array([1.0, -1.0, 3.0, -3.0]), 0.0) == pytest.approx(np.sqrt(5.0))


def test_confidence_interval():
    lo, hi = utils.rms_confidence_interval(1.0, 10_000)
    assert lo < 1.0 < hi
    # roughly +-4 standard errors of 1/sqrt(2n)
    assert hi - 1.0 == pytest.approx(4 / np.sqrt(20_000), rel=0.1)
    narrow = utils.rms_confidence_interval(1.0, 10_000, confidence=0.9)
    assert narrow[0] > lo and narrow[1] < hi


def test_standard_error():
    assert utils.rms_standard_error(2.0, 50) == pytest.approx(0.2)


def test_chunk_ranges():
    assert utils.chunk_ranges(5, 2) == [(0, 2), (2, 4), (4, 5)]
    assert utils.chunk_ranges(0, 3) == []


@pytest.mark.parametrize("threads", [1, 3])
def test_ordered_map_keeps_order(threads):
    assert utils.ordered_map(lambda x: x * x, range(20), threads) == [x * x for x in range(20)]


def test_to_json():
    text = utils.to_json(
        {"b": np.float64(0.5), "a": np.arange(3), "flag": np.bool_(True), "z": 1 + 2j}
    )
    assert text.endswith("\n")
    assert json.loads(text) == {
        "a": [0, 1, 2],
        "b": 0.5,
        "flag": True,
        "z": {"re": 1.0, "im": 2.0},
    }
    assert text.index('"a"') < text.index('"b"')


def test_paths_layout():
    paths = config.paths
    assert os.path.isdir(paths.scenarios)
    assert paths.scenario_file("crlb") == os.path.join(paths.scenarios, "crlb.cfg")
    assert os.path.dirname(paths.output) == paths.project_dir
    public = sorted(name for name in vars(config.Paths) if not name.startswith("_"))
    assert public == ["output", "scenario_file", "scenarios"]
