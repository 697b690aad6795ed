import pytest

from rsacoustic.camera import PRESETS
from rsacoustic.config import load_config, parse_config
from rsacoustic.errors import ConfigurationError


class TestDefaults:
    def test_empty_config(self):
        cfg = parse_config("")
        assert cfg.geom.rows == 1080 and cfg.geom.cols == 1920
        assert cfg.timing.row_rate == pytest.approx(34000)
        assert cfg.timing.frame_rate == 30
        assert cfg.path.mode == "flat" and cfg.spl == cfg.path.spl_ref
        assert cfg.reference == "frame0" and cfg.gap_policy == "drop"
        assert cfg.vcm.c_l == 40

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_every_preset(self, name):
        cfg = parse_config(f"[camera]\npreset = {name}\n")
        assert cfg.timing.row_rate == pytest.approx(PRESETS[name]["row_rate"])
        assert cfg.timing.frame_rate == PRESETS[name]["fps"]


class TestParsing:
    def test_comments_and_case(self):
        cfg = parse_config("[camera]\nROWS = 64 # trailing\n; full line\ncols = 16 ; other\n")
        assert (cfg.geom.rows, cfg.geom.cols) == (64, 16)

    def test_custom_camera(self):
        cfg = parse_config("[camera]\npreset = custom\nrow_rate = 50000\nframe_rate = 25\n"
                           "rows = 100\n")
        assert cfg.timing.row_readout == pytest.approx(2e-5)

    def test_table_path_defaults_to_brickwall(self):
        cfg = parse_config("[mechanics]\nmode = table\ncutoff = 300\n")
        assert cfg.path.gain_at(200) > 0 and cfg.path.gain_at(400) == 0

    def test_explicit_table(self):
        cfg = parse_config("[mechanics]\nmode = table\ntable = 100:1, 200:2\n")
        assert cfg.path.gain_at(150) == pytest.approx(1.5)

    def test_relative_paths_resolve_against_file(self, tmp_path):
        (tmp_path / "x.ini").write_text("[experiment]\noutput_dir = res\n")
        assert load_config(tmp_path / "x.ini").output_dir == tmp_path / "res"

    def test_lists(self):
        cfg = parse_config("[defense]\nsample_rates = 34000, 68000\nseeds = 3,4\n")
        assert cfg.defense.sample_rates == (34000.0, 68000.0)
        assert cfg.defense.seeds == (3, 4)


class TestDigest:
    def test_insensitive_to_order_whitespace_comments(self):
        a = parse_config("[camera]\nrows = 64\ncols = 16\n[audio]\nfreq = 300\n")
        b = parse_config("# note\n[audio]\nfreq   =   300\n\n[camera]\ncols = 16\nrows = 64\n")
        assert a.digest == b.digest and len(a.digest) == 16

    def test_sensitive_to_values(self):
        assert parse_config("[audio]\nfreq = 300\n").digest != \
            parse_config("[audio]\nfreq = 301\n").digest


class TestRejection:
    @pytest.mark.parametrize("text", [
        "[nonsense]\nx = 1\n",
        "[camera]\nbogus = 1\n",
        "[camera]\nrows = abc\n",
        "[camera]\nrows = 1\n",
        "[camera]\npreset = nokia\n",
        "[camera]\npreset = custom\n",
        "[camera]\nexposure = 0\n",
        "[camera]\nexposure = nan\n",
        "[camera]\nrows = 2000\n",  # readout longer than the frame period
        "[camera]\nschedule = interlaced\n",
        "[mechanics]\naxis_mix = 1, 0\n",
        "[mechanics]\ntable = 100-1\n",
        "[audio]\nsample_rate = 44100.5\n",
        "[audio]\nfreq = 30000\n",
        "[audio]\nsource = chirp\nf0 = 700\nf1 = 600\n",
        "[audio]\nsource = wav\n",
        "[audio]\nsource = wav\npath = /does/not/exist.wav\n",
        "[scene]\nsource = image\npath = /does/not/exist.pgm\n",
        "[registration]\ngroups = 5000\n",
        "[registration]\nreference = frame3\n",
        "[recovery]\ndenoise = maybe\n",
        "[recovery]\ngap_policy = interpolate\n",
        "[recovery]\ntarget_rate = 8000.5\n",
        "[defense]\nresiduals = 0.5, 1.5\n",
        "[defense]\nsample_rates = 1000\n",
        "[defense]\nseeds = 1.5\n",
        "[sweep]\naxis = colour\n",
        "no section header\n",
        "[camera]\nrows = 1\n[camera]\nrows = 2\n",
    ])
    def test_invalid(self, text):
        with pytest.raises(ConfigurationError):
            parse_config(text)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "missing.ini")

    def test_sweep_sample_rate_below_row_rate(self):
        with pytest.raises(ConfigurationError):
            parse_config("[sweep]\naxis = sample-rate\nvalues = 1000\n")


def test_default_sample_rates_follow_camera():
    cfg = parse_config("[camera]\npreset = iphone12pro\n")
    assert cfg.defense.sample_rates[0] == pytest.approx(160000)
