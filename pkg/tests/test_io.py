import json
import struct

import numpy as np
import pytest

from fourfold import ComplexField, GridSpec
from fourfold import io
from fourfold.correlator import Kernel


def test_pgm_round_trip_16bit(tmp_path, rng):
    img = rng.random((7, 11))
    io.write_pgm(tmp_path / "a.pgm", img)
    back = io.read_pgm(tmp_path / "a.pgm")
    assert back.shape == (7, 11)
    np.testing.assert_allclose(back, img, atol=0.5 / 65535 + 1e-15)


def test_pgm_8bit_with_comment(tmp_path):
    raw = bytes([0, 51, 255, 102])
    (tmp_path / "b.pgm").write_bytes(b"P5\n# made by hand\n2 2\n255\n" + raw)
    np.testing.assert_allclose(io.read_pgm(tmp_path / "b.pgm"), [[0, 0.2], [1, 0.4]])


def test_pgm_bad_magic(tmp_path):
    (tmp_path / "c.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(io.FormatError):
        io.read_pgm(tmp_path / "c.pgm")


def test_pgm_truncated(tmp_path):
    (tmp_path / "d.pgm").write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(io.FormatError):
        io.read_pgm(tmp_path / "d.pgm")


def test_cfld_round_trip(tmp_path, rng):
    grid = GridSpec(5, 3, 1.25e-6, 632e-9)
    a = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    io.write_cfld(tmp_path / "f.cfld", ComplexField(grid, a))
    back = io.read_cfld(tmp_path / "f.cfld")
    assert back.grid == grid
    np.testing.assert_array_equal(back.amplitudes, a)


def test_cfld_layout(tmp_path):
    grid = GridSpec(2, 2, 2.5e-6, 532e-9)
    io.write_cfld(tmp_path / "g.cfld", ComplexField(grid, np.array([[1 + 2j, 0], [0, -1j]])))
    data = (tmp_path / "g.cfld").read_bytes()
    assert data[:6] == b"CFLD1\n"
    assert struct.unpack_from("<IIdd", data, 6) == (2, 2, 2.5e-6, 532e-9)
    assert struct.unpack_from("<2d", data, 30) == (1.0, 2.0)
    assert len(data) == 30 + 4 * 16


def test_cfld_wrong_length(tmp_path):
    (tmp_path / "h.cfld").write_bytes(b"CFLD1\n" + struct.pack("<IIdd", 2, 2, 1e-6, 5e-7) + bytes(16))
    with pytest.raises(io.FormatError):
        io.read_cfld(tmp_path / "h.cfld")


def test_krn1_round_trip(tmp_path, rng):
    ks = [rng.standard_normal((3, 3)), rng.standard_normal((1, 5))]
    io.write_krn1(tmp_path / "k.krn", ks)
    back = io.read_kernels(tmp_path / "k.krn")
    assert [k.shape for k in back] == [(3, 3), (1, 5)]
    for k, w in zip(back, ks):
        np.testing.assert_array_equal(k.weights, w)


def test_krn1_trailing_bytes(tmp_path):
    io.write_krn1(tmp_path / "k.krn", [np.ones((2, 2))])
    with open(tmp_path / "k.krn", "ab") as fh:
        fh.write(b"\0")
    with pytest.raises(io.FormatError):
        io.read_krn1(tmp_path / "k.krn")


def test_krn1_truncated(tmp_path):
    (tmp_path / "t.krn").write_bytes(b"KRN1\n" + struct.pack("<III", 1, 3, 3) + bytes(8))
    with pytest.raises(io.FormatError):
        io.read_krn1(tmp_path / "t.krn")


def test_csv_kernel(tmp_path):
    (tmp_path / "k.csv").write_text("0,1,0\n1,-4,1\n0,1,0\n")
    (k,) = io.read_kernels(tmp_path / "k.csv")
    assert k == Kernel([[0, 1, 0], [1, -4, 1], [0, 1, 0]])


def test_csv_garbage(tmp_path):
    (tmp_path / "k.csv").write_text("a,b\n")
    with pytest.raises(io.FormatError):
        io.read_kernels(tmp_path / "k.csv")


def test_report_is_deterministic():
    report = {"b": [0.1, 2], "a": {"z": 1e-300, "y": True, "x": None}}
    text = io.dumps_report(report)
    assert text == io.dumps_report(dict(reversed(list(report.items()))))
    assert json.loads(text) == report
    assert text.index('"a"') < text.index('"b"')


def test_report_refuses_nan():
    with pytest.raises(ValueError):
        io.dumps_report({"x": float("nan")})
