"""Command line behavior and exit codes."""

import pytest

from otfs_plots.cli import main
from test_figures import BER_CSV


class TestCli:
    def test_successful_render(self, tmp_path, capsys):
        src = tmp_path / "ber.csv"
        src.write_text(BER_CSV)
        out = tmp_path / "fig.png"
        rc = main(["--kind", "ber", "--in", str(src), "--out", str(out)])
        assert rc == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_schema_mismatch_exit_code(self, tmp_path, capsys):
        src = tmp_path / "ber.csv"
        src.write_text("# schema: ber-v999\n" + BER_CSV.split("\n", 1)[1])
        out = tmp_path / "fig.png"
        rc = main(["--kind", "ber", "--in", str(src), "--out", str(out)])
        assert rc == 1
        assert not out.exists()
        assert "ber-v1" in capsys.readouterr().err

    def test_missing_input_exit_code(self, tmp_path, capsys):
        rc = main(["--kind", "ber", "--in", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path / "fig.png")])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_kind_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["--kind", "pie", "--in", "x.csv", "--out", "y.png"])

    def test_required_arguments(self):
        with pytest.raises(SystemExit):
            main(["--kind", "ber"])
