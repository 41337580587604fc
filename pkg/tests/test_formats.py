import math

import numpy as np
import pytest

from twinbeam import formats
from twinbeam.analysis import AnalysisReport, ConditionalEntry
from twinbeam.errors import DomainError, FormatError
from twinbeam.montecarlo import PulseRecordSet, sample_run
from twinbeam.theory import TwbParams


class TestRecords:
    def test_round_trip(self, tmp_path):
        r = sample_run(TwbParams.balanced(2, 3, 0.5), 500, 1)
        path = tmp_path / "r.csv"
        formats.write_records(r, path)
        raw = path.read_bytes()
        assert raw.startswith(b"shot,m1,m2\n0,") and b"\r" not in raw and raw.endswith(b"\n")
        assert formats.read_records(path) == r

    def test_exact_text(self):
        r = PulseRecordSet.from_counts([2, 0, 13], [1, 0, 1])
        assert formats.format_records(r) == "shot,m1,m2\n0,2,1\n1,0,0\n2,13,1\n"

    def test_empty_body(self):
        assert len(formats.parse_records("shot,m1,m2\n")) == 0

    @pytest.mark.parametrize("text", [
        "m1,m2\n0,0\n",
        "shot,m1,m2\n0,1\n",
        "shot,m1,m2\n0,1,-1\n",
        "shot,m1,m2\n0,1,1.5\n",
        "shot,m1,m2\n0,1,1\r\n1,1,1\r\n",
        "shot,m1,m2\n1,1,1\n",
        "shot,m1,m2\n0,1,1\n0,1,1\n",
        "shot,m1,m2\n0, 1,1\n",
    ])
    def test_rejects(self, text):
        with pytest.raises(FormatError):
            formats.parse_records(text)

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_bytes(b"shot,m1,m2\n\xff\n")
        with pytest.raises(FormatError):
            formats.read_records(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            formats.read_records(tmp_path / "nope.csv")


class TestConfig:
    def test_parse(self):
        c = formats.parse_config("# run\nM = 1.0\nmu=10  # modes\neta = 0.15\nm2 = 1, 2, 3\nshots = 1000\n")
        assert (c.M, c.mu, c.eta, c.m2, c.shots) == (1.0, 10.0, 0.15, (1, 2, 3), 1000)
        p = c.params()
        assert p.M1 == pytest.approx(1.0)

    def test_defaults(self):
        c = formats.RunConfig()
        assert (c.shots, c.seed, c.eps, c.m2, c.min_samples, c.nrf_variant) == \
            (200_000, 0, 1e-12, (1, 2), 100, "difference")

    def test_unbalanced(self):
        c = formats.parse_config("N = 2\nmu = 5\neta1 = 0.3\neta2 = 0.1\n")
        assert c.params() == TwbParams(2, 5, 0.3, 0.1)

    @pytest.mark.parametrize("text", ["bogus = 1\n", "N 2\n", "shots = many\n", "nrf_variant = printed\n"])
    def test_format_errors(self, text):
        with pytest.raises(FormatError):
            formats.parse_config(text)

    @pytest.mark.parametrize("text", [
        "N = 1\nM = 1\nmu = 2\neta = 0.1\n",
        "N = 1\neta = 0.1\n",
        "N = 1\nmu = 2\n",
        "N = 1\nmu = 2\neta = 0.1\neta1 = 0.2\n",
        "mu = 2\neta = 0.1\n",
    ])
    def test_domain_errors(self, text):
        with pytest.raises(DomainError):
            formats.parse_config(text).params()

    def test_grid(self):
        assert formats.parse_grid("1, 2,5") == (1.0, 2.0, 5.0)
        assert formats.parse_grid("0:1:5") == (0.0, 0.25, 0.5, 0.75, 1.0)


class TestTables:
    @pytest.mark.parametrize("x, text", [
        (0.1770833333333, "0.177083333"), (1e-20, "1e-20"), (3, "3"), (math.nan, "nan"),
        (math.inf, "inf"), (None, ""), (True, "true"), (np.float64(2.5), "2.5"),
    ])
    def test_fmt_float(self, x, text):
        assert formats.fmt_float(x) == text

    def test_table_quotes(self):
        out = formats.format_table(["a", "b"], [[1.5, "x,y"], [2, 'q"']])
        assert out == 'a,b\n1.5,"x,y"\n2,"q"""\n'

    def test_report(self):
        rep = AnalysisReport(eta_hat=0.15, provenance="file=x")
        rep.conditional[1] = ConditionalEntry(1, 120, 0.5, 0.9, 0.01)
        rep.theory_overlay["nrf_formula"] = 0.85
        rep.warnings.append("w")
        rep.errors.append("e")
        text = formats.format_report(rep)
        assert text.splitlines() == [
            "provenance = file=x", "eta_hat = 0.15",
            "cond_m2_1_samples = 120", "cond_m2_1_mean = 0.5", "cond_m2_1_fano = 0.9",
            "cond_m2_1_fano_se = 0.01", "theory_nrf_formula = 0.85", "warning = w", "error = e",
        ]
        table = formats.format_conditional_table(rep)
        assert table == "m2,samples,mean,fano,fano_se,fano_formula,fano_model\n1,120,0.5,0.9,0.01,,\n"
