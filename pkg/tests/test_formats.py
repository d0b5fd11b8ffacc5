import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parser_cases import CSV_BAD, CSV_GOOD, TOUCHSTONE_BAD, TOUCHSTONE_GOOD
from vnauq.errors import ParseError
from vnauq.formats import Sweep, dumps, loads, parse_sample_csv, parse_touchstone_s1p, write_touchstone_s1p


def _ids(cases):
    return [c[0] for c in cases]


def test_case_table_is_broad():
    assert len(TOUCHSTONE_GOOD) + len(TOUCHSTONE_BAD) + len(CSV_GOOD) + len(CSV_BAD) >= 30


@pytest.mark.parametrize("name,text,freqs,s11", TOUCHSTONE_GOOD, ids=_ids(TOUCHSTONE_GOOD))
def test_touchstone_good(name, text, freqs, s11):
    sweep = parse_touchstone_s1p(text)
    np.testing.assert_allclose(sweep.frequencies, freqs, rtol=1e-15)
    np.testing.assert_allclose(sweep.s11, s11, atol=1e-15)


@pytest.mark.parametrize("name,text,line,fragment", TOUCHSTONE_BAD, ids=_ids(TOUCHSTONE_BAD))
def test_touchstone_bad(name, text, line, fragment):
    with pytest.raises(ParseError, match=fragment) as info:
        parse_touchstone_s1p(text)
    assert info.value.line == line
    if line is not None:
        assert str(info.value).startswith(f"line {line}")


def test_touchstone_header_fields():
    sweep = parse_touchstone_s1p("# MHz S DB R 75\n10 -20 30\n")
    assert sweep.format_tag == "DB" and sweep.ref_impedance == 75.0
    assert parse_touchstone_s1p("1 1 0\n").format_tag == "MA"


def test_units_map_to_one_grid():
    hz = np.array([1.25e9, 2.5e9, 3.75e9])
    grids = []
    for unit, scale in [("Hz", 1), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)]:
        body = "".join(f"{f / scale:.17g} 0.5 10\n" for f in hz)
        grids.append(parse_touchstone_s1p(f"# {unit} S MA R 50\n{body}").frequencies)
    for g in grids:
        np.testing.assert_allclose(g, hz, rtol=1e-15)


def test_formats_agree_on_the_same_point():
    s = 0.2 * np.exp(1j * math.radians(-40))
    ri = parse_touchstone_s1p(f"# Hz S RI R 50\n1 {s.real:.17g} {s.imag:.17g}\n").s11[0]
    ma = parse_touchstone_s1p("# Hz S MA R 50\n1 0.2 -40\n").s11[0]
    db = parse_touchstone_s1p(f"# Hz S DB R 50\n1 {20 * math.log10(0.2)!r} -40\n").s11[0]
    assert abs(ri - s) < 1e-15 and abs(ma - s) < 1e-15 and abs(db - s) < 1e-15


sweeps = st.builds(
    lambda steps, mags, phases, fmt, unit: (
        Sweep(
            np.cumsum(steps),
            np.array(mags[: len(steps)]) * np.exp(1j * np.array(phases[: len(steps)])),
            fmt,
            50.0,
        ),
        unit,
    ),
    steps=st.lists(st.floats(1e3, 1e9), min_size=1, max_size=20),
    mags=st.lists(st.floats(1e-6, 1.0), min_size=20, max_size=20),
    phases=st.lists(st.floats(-3.1, 3.1), min_size=20, max_size=20),
    fmt=st.sampled_from(["RI", "MA", "DB"]),
    unit=st.sampled_from(["Hz", "kHz", "MHz", "GHz"]),
)


@settings(max_examples=200)
@given(sweeps)
def test_touchstone_round_trip(case):
    sweep, unit = case
    back = parse_touchstone_s1p(write_touchstone_s1p(sweep, unit, comment="round trip\nsecond line"))
    assert back.format_tag == sweep.format_tag
    np.testing.assert_allclose(back.frequencies, sweep.frequencies, rtol=1e-12)
    np.testing.assert_allclose(back.s11, sweep.s11, rtol=1e-12, atol=1e-12 * np.abs(sweep.s11).max())


def test_sweep_invariants():
    with pytest.raises(ValueError):
        Sweep([1, 1], [0, 0])
    with pytest.raises(ValueError):
        Sweep([1, 2], [0])


@pytest.mark.parametrize("name,text,expected", CSV_GOOD, ids=_ids(CSV_GOOD))
def test_csv_good(name, text, expected):
    table = parse_sample_csv(text)
    assert list(table) == list(expected)
    for key, values in expected.items():
        np.testing.assert_allclose(table[key].values, values)


@pytest.mark.parametrize("name,text,line,column,fragment", CSV_BAD, ids=_ids(CSV_BAD))
def test_csv_bad(name, text, line, column, fragment):
    with pytest.raises(ParseError, match=fragment) as info:
        parse_sample_csv(text)
    assert info.value.line == line
    assert info.value.column == column


def test_csv_mean_and_size():
    table = parse_sample_csv("c0\n1\n2\n3\n")
    assert table.n == 3 and table["c0"].mean == 2.0


def test_csv_fifty_rows_two_columns():
    rng = np.random.default_rng(0)
    rows = "\n".join(f"{a:.17g},{b:.17g}" for a, b in rng.normal(size=(50, 2)))
    table = parse_sample_csv("open.c0,short.l0\n" + rows + "\n")
    assert table["open.c0"].n == 50 and table["short.l0"].n == 50


# --- JSON --------------------------------------------------------------------


def test_dumps_keeps_seventeen_digits():
    text = dumps({"x": 0.1, "y": 1 / 3, "n": 3, "flag": True, "name": "a"})
    doc = json.loads(text)
    assert doc["x"] == 0.1 and doc["y"] == 1 / 3
    assert "3.3333333333333331e-01" in text
    assert text.endswith("\n")


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_float_round_trip(x):
    text = dumps({"v": x})
    assert json.loads(text)["v"] == x
    assert dumps(json.loads(text)) == text


def test_dumps_rejects_non_finite():
    with pytest.raises(ValueError):
        dumps({"v": math.inf})


def test_loads_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        loads('{\n  "a": 1,\n  oops\n}\n')
    assert info.value.line == 3
    with pytest.raises(ParseError):
        loads("[1, 2]")
    with pytest.raises(ParseError, match="expected a 'vnauq-report'"):
        loads('{"format": "vnauq-simulation"}', "vnauq-report")
