import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmps.features import init_feature_map
from nmps.sf_agent import SuccessorTable
from nmps.snapshot import Snapshot, dumps, load, loads, save

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestSnapshot:
    @settings(max_examples=40, deadline=None)
    @given(psi=arrays(np.float64, (3, 2, 4), elements=finite), w=arrays(np.float64, (4, 5), elements=finite))
    def test_round_trip_is_bit_exact(self, psi, w):
        fmap = init_feature_map(5, 4, 0)
        fmap = type(fmap)(w, fmap.trainable, fmap.learning_rate, fmap.nonlinearity)
        snap = Snapshot(fmap, SuccessorTable(3, 2, 4, psi=psi), {"step": 7}, {"extra": psi[0]})
        back = loads(dumps(snap))
        assert back.equals(snap)
        assert np.array_equal(back.successor.psi.view(np.int64), psi.view(np.int64))
        assert np.array_equal(back.feature_map.weights, w)

    def test_linear_table_and_file(self, tmp_path):
        table = SuccessorTable(3, 2, 4, tabular=False, psi=np.arange(32.0).reshape(4, 2, 4) / 3)
        snap = Snapshot(None, table, {"variant": "v"})
        back = load(save(snap, tmp_path / "s.json"))
        assert not back.successor.tabular and back.successor.psi.shape == (4, 2, 4)
        assert back.equals(snap)

    def test_rejects_foreign_documents(self):
        with pytest.raises(ValueError):
            loads(json.dumps({"format": "other"}))
        doc = json.loads(dumps(Snapshot(None, None)))
        doc["version"] = 99
        with pytest.raises(ValueError):
            loads(json.dumps(doc))
