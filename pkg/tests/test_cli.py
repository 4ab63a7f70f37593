"""Command-line runner: subcommands, config handling, manifests, exit codes."""

import math

import pytest

from qpluri import cli


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv(cli.ENV_OUTPUT, str(d))
    return d


def test_identities_command(outdir, capsys):
    assert cli.main(["identities", "--seed", "1", "--count", "10"]) == 0
    out = capsys.readouterr().out
    assert "PASS identities" in out and "worst_margin=0" in out
    assert (outdir / "identities.tsv").exists()
    assert (outdir / "identities.manifest.ini").exists()


def test_identities_mutation_exit_status(outdir):
    assert cli.main(["identities", "--count", "3", "--mutation", "drop-half"]) == 1


def test_ma_density_prints_128(outdir, capsys):
    assert cli.main(["ma-density", "--function", "normsq", "--n", "2"]) == 0
    assert capsys.readouterr().out.strip() == "128"
    rows = (outdir / "ma-density.tsv").read_text().splitlines()
    assert rows[1] == "normsq\t2\t128"


def test_capacity_command(outdir, capsys):
    assert cli.main(["capacity", "--K", "ball:0.5", "--omega", "1.0", "--res", "41"]) == 0
    rows = (outdir / "capacity.tsv").read_text().splitlines()
    value = float(rows[1].split("\t")[3])
    assert abs(value - 4 * math.pi ** 2 / 3) / (4 * math.pi ** 2 / 3) < 0.10
    assert float(rows[1].split("\t")[5]) <= 1e-8
    assert "radial formula" in capsys.readouterr().out


def test_manifest_round_trip_is_byte_identical(outdir, tmp_path):
    assert cli.main(["capacity", "--K", "ball:0.3", "--K", "ball:0.4", "--res", "21"]) == 0
    first = (outdir / "capacity.tsv").read_bytes()
    manifest = tmp_path / "m.ini"
    manifest.write_bytes((outdir / "capacity.manifest.ini").read_bytes())
    (outdir / "capacity.tsv").unlink()
    assert cli.main(["--config", str(manifest)]) == 0
    assert (outdir / "capacity.tsv").read_bytes() == first


def test_extremal_snapshot(outdir):
    assert cli.main(["extremal", "--K", "ball:0.5", "--res", "21", "--snapshot-format", "binary"]) == 0
    from qpluri.grid import load
    u = load(outdir / "extremal.grid")
    assert u.box.resolution == 21
    row = (outdir / "extremal.tsv").read_text().splitlines()[1].split("\t")
    assert float(row[5]) < 0.08


def test_decay_and_report(outdir, capsys):
    assert cli.main(["decay", "--study", "shrinking-ball", "--res", "21",
                     "--radii", "0.5,0.4,0.3"]) == 0
    table = outdir / "decay.tsv"
    assert table.read_text().splitlines()[0] == "radius\tcapacity"
    capsys.readouterr()
    assert cli.main(["report", str(table)]) == 0
    assert "# exponent" in capsys.readouterr().out


def test_config_errors_are_aggregated(tmp_path, outdir, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\ncommand = capacity\nresolution = 20\nomega = -1\nbogus = 3\n")
    assert cli.main(["--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    for key in ("resolution", "omega", "bogus"):
        assert key in err


def test_malformed_config_and_unknown_command(tmp_path, outdir, capsys):
    cfg = tmp_path / "broken.ini"
    cfg.write_text("no section header\n")
    assert cli.main(["--config", str(cfg)]) == 2
    assert "malformed" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["--out", str(blocker / "sub"), "ma-density"]) == 2
    assert "cannot write output directory" in capsys.readouterr().err


def test_report_summaries(outdir, capsys):
    assert cli.main(["identities", "--count", "3", "--n-range", "1"]) == 0
    good = outdir / "identities.tsv"
    good_copy = outdir / "good.tsv"
    good_copy.write_bytes(good.read_bytes())
    assert cli.main(["identities", "--count", "3", "--n-range", "1", "--mutation", "perm-sign"]) == 1
    capsys.readouterr()
    assert cli.main(["report", str(good_copy)]) == 0
    assert "PASS 1/1" in capsys.readouterr().out
    assert cli.main(["report", str(good_copy), str(good)]) == 1
    assert "FAIL 1/2: identities" in capsys.readouterr().out
    corrupt = outdir / "corrupt.tsv"
    corrupt.write_text("what\never\n")
    assert cli.main(["report", str(corrupt)]) == 2
    assert "corrupt.tsv" in capsys.readouterr().err


def test_verify_all_quick(outdir, capsys):
    code = cli.main(["verify-all", "--count", "5", "--pairs", "3", "--quick"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS 8/8" in out
