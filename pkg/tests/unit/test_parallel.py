import json
import math

from hypothesis import given
from hypothesis import strategies as st

from services.events import log_event
from services.parallel import parallel_map


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), max_size=200), st.integers(min_value=1, max_value=8))
def test_order_preserved(items, threads):
    assert parallel_map(lambda x: x * 3.0, items, threads) == [x * 3.0 for x in items]


@given(st.lists(st.floats(min_value=-1e12, max_value=1e12), min_size=1, max_size=200))
def test_reduction_independent_of_threads(items):
    single = math.fsum(parallel_map(abs, items, 1))
    assert math.fsum(parallel_map(abs, items, 8)) == single


def test_log_event_is_one_json_line(capsys):
    log_event("run_started", run_id="r1", params={"q": 3}, value=1 + 2j)
    line = capsys.readouterr().err.strip()
    data = json.loads(line)
    assert data["event"] == "run_started"
    assert data["run_id"] == "r1"
    assert data["params"] == {"q": 3}
    assert "timestamp" in data
