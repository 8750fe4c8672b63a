import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ward_ident.errors import RecordError
from ward_ident.pmu import align, format_records, parse_records, read_records, write_records
from ward_ident.signals import SignalSet, channel_id, split_channel


def sample_set(n=11, dt=0.01, t0=0.0):
    t = t0 + dt * np.arange(n)
    return SignalSet(t, {"B1:vmag_pu": 1.0 + 0.01 * np.sin(t), "L1@B1:p_mw": 100.0 * np.cos(t)}, 50.0)


def test_channel_ids():
    assert channel_id("B1", "freq_hz") == "B1:freq_hz"
    assert split_channel("L1@B1:p_mw") == ("L1@B1", "p_mw")
    with pytest.raises(ValueError):
        split_channel("B1:speed")
    with pytest.raises(ValueError):
        split_channel("nocolon")


def test_signal_set_checks_lengths():
    with pytest.raises(ValueError, match="B1:vmag_pu"):
        SignalSet(np.arange(3) * 0.1, {"B1:vmag_pu": [1.0, 1.0]})


def test_signal_set_needs_uniform_grid():
    with pytest.raises(ValueError):
        SignalSet(np.array([0.0, 0.1, 0.3]), {"B1:vmag_pu": [1.0, 1.0, 1.0]})


def test_format_header_and_lf():
    text = format_records(sample_set())
    assert text.startswith("# pmu-record v1, f_nominal=50, dt=0.01\nt_s,B1:vmag_pu,L1@B1:p_mw\n")
    assert "\r" not in text and text.endswith("\n")
    assert text.splitlines()[3].split(",")[0] == "0.01"


def test_file_round_trip(tmp_path):
    s = sample_set(101)
    path = write_records(s, tmp_path / "sub" / "rec.csv")
    back = read_records(path)
    assert np.array_equal(back.t, s.t)
    for c in s.channels:
        assert np.allclose(back[c], s[c], rtol=1e-11, atol=0)
    assert path.read_bytes() == format_records(back).encode()


@given(
    values=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40),
    dt=st.sampled_from([0.001, 0.01, 0.02, 0.1]),
)
@settings(max_examples=50, deadline=None)
def test_round_trip_stable_after_first_write(values, dt):
    s = SignalSet(dt * np.arange(len(values)), {"X:q_mvar": values})
    once = format_records(parse_records(format_records(s)))
    assert format_records(parse_records(once)) == once
    assert np.allclose(parse_records(once)["X:q_mvar"], values, rtol=1e-11, atol=1e-300)


def test_crlf_accepted():
    text = format_records(sample_set()).replace("\n", "\r\n")
    assert parse_records(text).t.size == 11


@pytest.mark.parametrize(
    "mutate, line",
    [
        (lambda ls: ["# pmu-record v2, f_nominal=50, dt=0.01"] + ls[1:], 1),
        (lambda ls: ["garbage"] + ls[1:], 1),
        (lambda ls: [ls[0], "time,B1:vmag_pu"] + ls[2:], 2),
        (lambda ls: [ls[0], "t_s,B1:speed,L1@B1:p_mw"] + ls[2:], 2),
        (lambda ls: ls[:4] + ["0.03,1.0"] + ls[5:], 5),
        (lambda ls: ls[:5] + ["0.04,abc,1"] + ls[6:], 6),
        (lambda ls: ls[:6] + ["0.055,1,1"] + ls[7:], 7),
    ],
)
def test_malformed_lines_reported(mutate, line):
    lines = format_records(sample_set()).splitlines()
    with pytest.raises(RecordError) as exc:
        parse_records("\n".join(mutate(lines)) + "\n")
    assert exc.value.line == line


def test_missing_file(tmp_path):
    with pytest.raises(RecordError, match="cannot read"):
        read_records(tmp_path / "nope.csv")


def test_align_identity():
    s = sample_set()
    a, b = align(s, s)
    assert a is s and b is s


def test_align_resamples_to_coarser_grid():
    fine = sample_set(101, 0.001)
    coarse = sample_set(11, 0.01)
    a, b = align(fine, coarse)
    assert np.allclose(a.t, coarse.t) and np.allclose(b.t, coarse.t)
    assert np.allclose(a["L1@B1:p_mw"], coarse["L1@B1:p_mw"], atol=1e-9)


def test_align_overlap_and_errors():
    a, b = align(sample_set(11, 0.01), sample_set(11, 0.01, t0=0.05))
    assert a.t[0] == pytest.approx(0.05) and a.t[-1] == pytest.approx(0.1)
    with pytest.raises(RecordError, match="overlap"):
        align(sample_set(5), sample_set(5, t0=1.0))
    with pytest.raises(RecordError, match="incommensurate"):
        align(sample_set(11, 0.01), sample_set(11, 0.015))
