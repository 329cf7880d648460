import json

import numpy as np
import pandas as pd
import pytest

from oprouting.utils import create_experiment_folder
from oprouting.utils.rng import RandomStreams, SimulationStreams
from oprouting.utils.static_funcs import atomic_write_csv, atomic_write_json, mask_of, members, nearly_equal, \
    parse_float_list, popcount, to_builtin


class TestStaticFuncs:

    def test_masks(self):
        assert mask_of([0, 2]) == 0b101
        assert members(0b10110) == (1, 2, 4)
        assert members(mask_of([3, 1, 3])) == (1, 3)
        assert popcount(0b1011) == 3
        assert members(0) == ()

    def test_nearly_equal(self):
        assert nearly_equal(0.5, 0.5 + 1e-14)
        assert nearly_equal(0.0, 0.0)
        assert not nearly_equal(0.0, 1e-300)
        assert not nearly_equal(0.1, 0.15)

    def test_parse_float_list(self):
        assert parse_float_list("1, 2.5,3,") == [1.0, 2.5, 3.0]
        assert parse_float_list([1, 2]) == [1.0, 2.0]
        assert parse_float_list("") == []
        with pytest.raises(ValueError):
            parse_float_list("1,x")

    def test_to_builtin(self):
        obj = {1: np.array([1.5, 2.0]), "b": (np.int64(3), np.bool_(True), np.float32(0.5))}
        assert json.loads(json.dumps(to_builtin(obj))) == {"1": [1.5, 2.0], "b": [3, True, 0.5]}

    def test_atomic_writes(self, tmp_path):
        path = tmp_path / "nested" / "out.json"
        atomic_write_json({"x": 0.1}, str(path))
        with open(path) as fh:
            assert json.load(fh) == {"x": 0.1}
        csv = tmp_path / "frame.csv"
        atomic_write_csv(pd.DataFrame({"a": [0.1, 1 / 3]}), str(csv))
        assert pd.read_csv(csv)["a"].tolist() == [0.1, 1 / 3]
        assert sorted(p.name for p in tmp_path.iterdir()) == ["frame.csv", "nested"]

    def test_experiment_folder(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        path, parent = create_experiment_folder()
        assert parent.endswith("Log")
        assert path.startswith(parent)


class TestRandomStreams:

    def test_streams_are_reproducible_and_distinct(self):
        a, b = RandomStreams(7), RandomStreams(7)
        assert a.generator("channel").random() == b.generator("channel").random()
        assert a.generator("channel").random() != a.generator("arrivals").random()
        assert a.generator("sample", 1).random() != a.generator("sample", 2).random()
        assert a.fork(0).generator("channel").random() != a.generator("channel").random()

    def test_unknown_stream(self):
        with pytest.raises(ValueError):
            RandomStreams(0).generator("weather")

    def test_simulation_streams(self):
        s = SimulationStreams.from_seed(3)
        t = SimulationStreams(RandomStreams(3))
        assert s.tie.integers(1000) == t.tie.integers(1000)
