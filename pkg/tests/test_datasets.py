import json

import pytest
from hypothesis import given, strategies as st

from iecache.datasets import (GoldTable, TaskInstance, adapt, adapt_calendar, adapt_qmsum, load_dataset,
                              write_dataset)
from iecache.errors import AdapterError, DatasetFormatError, DuplicateId


def line(**kw):
    base = {"id": "a", "query": "q", "text": "t", "golds": ["g"]}
    base.update(kw)
    return json.dumps({k: v for k, v in base.items() if v is not None})


def test_load_two_lines(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(line(id="a") + "\n" + line(id="b", family="planning") + "\n")
    tasks = load_dataset(p)
    assert [t.id for t in tasks] == ["a", "b"] and tasks[1].family == "planning"


def test_missing_query_reports_line(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(line(id="a") + "\n" + line(id="b", query=None) + "\n")
    with pytest.raises(DatasetFormatError) as info:
        load_dataset(p)
    assert info.value.line == 2


def test_duplicate_id(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(line() + "\n" + line() + "\n")
    with pytest.raises(DuplicateId):
        load_dataset(p)


@pytest.mark.parametrize("bad", [line(golds=[]), line(query="  "), line(family="poetry"), "{not json",
                                 line(gold_schema=[{"name": "a"}, {"name": "a"}]),
                                 line(gold_table={"slots": ["a"], "rows": [["x", "y"]]})])
def test_invalid_records(tmp_path, bad):
    p = tmp_path / "d.jsonl"
    p.write_text(bad + "\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(p)


def test_write_load_round_trip(tmp_path):
    t = TaskInstance("x", "q", "t", ("g1", "g2"), "qa", None, GoldTable(("a", "b"), (("1", None),)))
    p = tmp_path / "d.jsonl"
    write_dataset([t], p)
    assert load_dataset(p) == [t]


def test_qmsum_flattening(tmp_path):
    meeting = {"meeting_id": "m1",
               "meeting_transcripts": [{"speaker": "A", "content": "hello  there"},
                                       {"speaker": "B", "content": "hi"}, {"speaker": "A", "content": "bye"}],
               "general_query_list": [{"query": "Summarize.", "answer": "They greet."}],
               "specific_query_list": [{"query": "What did B say?", "answer": "hi"}]}
    src = tmp_path / "q.jsonl"
    src.write_text(json.dumps(meeting) + "\n")
    out = tmp_path / "out.jsonl"
    assert adapt("qmsum", src, out) == 2
    tasks = load_dataset(out)
    assert tasks[0].text == "A: hello there\nB: hi\nA: bye"
    assert [t.id for t in tasks] == ["m1-g0", "m1-s0"]
    assert all(t.family == "summarization" for t in tasks)
    assert tasks[1].golds == ("hi",)


def test_calendar_gold_normalized():
    recs = [{"_key": "cal-1", "prompt_0shot": "Schedule a meeting...\nSOLUTION: ",
             "golden_plan": "Here is the proposed time: Monday,  14:30 -15:30 "}]
    (t,) = adapt_calendar(recs)
    assert t.golds == ("Monday, 14:30 - 15:30",) and t.id == "cal-1"
    assert t.family == "planning" and not t.text.endswith("SOLUTION:")


def test_tact_table(tmp_path):
    rec = {"id": "t1", "instruction": "How many?", "text": "Two apples.", "answer": "2",
           "table": {"columns": ["fruit", "count"], "rows": [["apple", 2]]},
           "schema": [{"name": "fruit", "kind": "text"}, {"name": "count", "kind": "integer"}]}
    src = tmp_path / "tact.json"
    src.write_text(json.dumps([rec]))
    out = tmp_path / "out.jsonl"
    assert adapt("tact", src, out) == 1
    (t,) = load_dataset(out)
    assert t.gold_table == GoldTable(("fruit", "count"), (("apple", 2),))
    assert t.gold_schema.origin == "gold" and t.gold_schema.slot("count").value_kind == "number"


def test_empty_source(tmp_path):
    src = tmp_path / "e.json"
    src.write_text("")
    out = tmp_path / "out.jsonl"
    assert adapt("tact", src, out) == 0
    assert out.read_text() == ""


def test_adapter_error_carries_id():
    with pytest.raises(AdapterError) as info:
        list(adapt_qmsum([{"meeting_id": "m9"}]))
    assert info.value.record_id == "m9"


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        adapt("squad", tmp_path / "x", tmp_path / "y")


turn = st.fixed_dictionaries({"speaker": st.sampled_from(["A", "B"]), "content": st.text(min_size=1, max_size=20)})
query = st.fixed_dictionaries({"query": st.text(min_size=1, max_size=10).filter(str.strip),
                               "answer": st.text(min_size=1, max_size=10)})


@given(st.lists(turn, min_size=1, max_size=4), st.lists(query, max_size=3))
def test_qmsum_round_trip_and_no_fabrication(turns, queries):
    meeting = {"meeting_id": "m", "meeting_transcripts": turns, "general_query_list": queries}
    try:
        tasks = list(adapt_qmsum([meeting]))
    except AdapterError:
        return  # e.g. whitespace-only transcript
    for t, q in zip(tasks, queries):
        assert t.golds == (q["answer"],)
        assert TaskInstance(**{**t.__dict__}) == t


def test_source_layouts(tmp_path):
    from iecache.datasets import _read_records
    p = tmp_path / "s.json"
    p.write_text('{"k1": {"a": 1}, "k2": {"a": 2}}')
    assert _read_records(p) == [{"a": 1, "_key": "k1"}, {"a": 2, "_key": "k2"}]
    p.write_text('{"a": 1}\n')
    assert _read_records(p) == [{"a": 1}]
    p.write_text('{"a": 1}\n{"a": 2}\n')
    assert _read_records(p) == [{"a": 1}, {"a": 2}]
    p.write_text('[1, 2]')
    with pytest.raises(AdapterError):
        _read_records(p)


# synthetic demo set ---------------------------------------------------------------

import re
from pathlib import Path

SYNTHETIC = Path(__file__).resolve().parent.parent / "data" / "synthetic"


@pytest.mark.parametrize("family", ["qa", "planning", "summarization"])
def test_synthetic_files(family):
    tasks = load_dataset(SYNTHETIC / f"{family}.jsonl")
    assert 10 <= len(tasks) <= 20
    assert all(t.family == family and t.id.startswith("synthetic-") for t in tasks)


def _minutes(hhmm):
    h, m = hhmm.split(":")
    return int(h) * 60 + int(m)


def free_slots(text):
    """Every half-hour start on a 30-minute grid where nobody is busy."""
    days = re.search(r"work hours of 9:00 to 17:00 on (.*?)\.\n", text).group(1)
    days = re.findall(r"[A-Z][a-z]+day", days)
    busy = {d: [] for d in days}
    for day, spans in re.findall(r"([A-Z][a-z]+day) during ([^;]*);", text):
        for a, b in re.findall(r"(\d+:\d\d) to (\d+:\d\d)", spans):
            busy[day].append((_minutes(a), _minutes(b)))
    out = []
    for day in days:
        for start in range(9 * 60, 17 * 60, 30):
            if all(start + 30 <= a or start >= b for a, b in busy[day]):
                out.append(f"{day}, {start // 60}:{start % 60:02d} - {(start + 30) // 60}:{(start + 30) % 60:02d}")
    return out


def test_synthetic_planning_golds_are_solutions():
    for t in load_dataset(SYNTHETIC / "planning.jsonl"):
        slots = free_slots(t.text)
        if "earliest" in t.text:
            assert t.golds[0] == slots[0], t.id
        elif "rather not meet before 13:00" in t.text:
            assert [s for s in slots if _minutes(s.split(", ")[1].split(" - ")[0]) >= 13 * 60] == [t.golds[0]]
        else:
            assert slots == [t.golds[0]], (t.id, slots)
