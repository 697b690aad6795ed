import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rsacoustic.errors import InputError
from rsacoustic.fileio import (read_csv, read_manifest, read_pgm, read_wav, write_csv,
                               write_manifest, write_pgm, write_wav)
from rsacoustic.signal import AudioSignal


class TestWav:
    def test_roundtrip_within_quantisation(self, tmp_path):
        x = 0.9 * np.sin(np.arange(1000) * 0.07)
        write_wav(tmp_path / "a.wav", AudioSignal(x, 8000))
        back = read_wav(tmp_path / "a.wav")
        assert back.sample_rate == 8000
        np.testing.assert_allclose(back.samples, x, atol=0.5 / 32767 + 1e-12)

    def test_header_bytes(self, tmp_path):
        write_wav(tmp_path / "a.wav", AudioSignal(np.array([0.0, 1.0, -1.0]), 16000))
        blob = (tmp_path / "a.wav").read_bytes()
        assert blob[:4] == b"RIFF" and blob[8:12] == b"WAVE"
        # fmt chunk: PCM, mono, 16000 Hz, 16 bits
        assert int.from_bytes(blob[20:22], "little") == 1
        assert int.from_bytes(blob[22:24], "little") == 1
        assert int.from_bytes(blob[24:28], "little") == 16000
        assert int.from_bytes(blob[34:36], "little") == 16
        assert blob[-6:] == np.array([0, 32767, -32767], "<i2").tobytes()

    def test_clipping(self, tmp_path):
        write_wav(tmp_path / "a.wav", AudioSignal(np.array([2.0, -3.0]), 8000))
        np.testing.assert_array_equal(read_wav(tmp_path / "a.wav").samples, [1.0, -1.0])

    def test_fractional_rate_rejected(self, tmp_path):
        with pytest.raises(InputError):
            write_wav(tmp_path / "a.wav", AudioSignal(np.zeros(4), 8000.5))


class TestPgm:
    @given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)),
                  elements=st.floats(0, 1)))
    @settings(max_examples=25, deadline=None)
    def test_roundtrip(self, img):
        import tempfile
        from pathlib import Path
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "a.pgm"
            write_pgm(p, img)
            np.testing.assert_allclose(read_pgm(p), img, atol=0.5 / 65535 + 1e-12)

    def test_header_and_byte_order(self, tmp_path):
        write_pgm(tmp_path / "a.pgm", np.array([[0.0, 1.0]]))
        assert (tmp_path / "a.pgm").read_bytes() == b"P5\n2 1\n65535\n\x00\x00\xff\xff"

    def test_eight_bit_with_comment(self, tmp_path):
        (tmp_path / "b.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
        np.testing.assert_array_equal(read_pgm(tmp_path / "b.pgm"), [[0.0, 1.0]])

    @pytest.mark.parametrize("blob", [b"P2\n1 1\n255\n0", b"garbage"])
    def test_rejects_non_p5(self, tmp_path, blob):
        (tmp_path / "c.pgm").write_bytes(blob)
        with pytest.raises(InputError):
            read_pgm(tmp_path / "c.pgm")

    def test_rejects_3d(self, tmp_path):
        with pytest.raises(InputError):
            write_pgm(tmp_path / "a.pgm", np.zeros((2, 2, 2)))


class TestCsvManifest:
    def test_csv_crlf_and_quoting(self, tmp_path):
        write_csv(tmp_path / "a.csv", ["name", "v"], [["a,b", 0.1], ['q"x', 2]])
        assert (tmp_path / "a.csv").read_bytes() == b'name,v\r\n"a,b",0.1\r\n"q""x",2\r\n'
        header, rows = read_csv(tmp_path / "a.csv")
        assert header == ["name", "v"] and rows == [["a,b", 0.1], ['q"x', 2.0]]

    def test_float_repr_roundtrip(self, tmp_path):
        vals = [1 / 3, 1e-300, -2.5e17, np.float64(0.1 + 0.2)]
        write_csv(tmp_path / "a.csv", ["v"], [[v] for v in vals])
        _, rows = read_csv(tmp_path / "a.csv")
        assert [r[0] for r in rows] == [float(v) for v in vals]

    def test_manifest_roundtrip_preserves_order(self, tmp_path):
        entries = {"b": "1", "a": "x = y", "c": 0.5}
        write_manifest(tmp_path / "m.txt", entries)
        assert (tmp_path / "m.txt").read_text() == "b = 1\na = x = y\nc = 0.5\n"
        back = read_manifest(tmp_path / "m.txt")
        assert list(back) == ["b", "a", "c"] and back["a"] == "x = y"
