import json
import math
import sys

import pytest

sys.path.insert(0, str(__import__("pathlib").Path(__file__).parent))

from synth_digits import make_digit_set  # noqa: E402

from patchlr.cli import main  # noqa: E402
from patchlr.formats import read_pgm, read_sinogram, write_idx, write_pgm  # noqa: E402
from patchlr.linalg import read_matrix_market  # noqa: E402
from patchlr.synth import make_phantom  # noqa: E402


def _run(*argv):
    return main([str(a) for a in argv])


def test_phantom_and_mask_and_sidecars(tmp_path):
    ph = tmp_path / "ph.pgm"
    assert _run("phantom", "--kind", "texture", "--size", 32, "--output", ph) == 0
    img = read_pgm(ph)
    assert img.shape == (32, 32)
    meta = json.loads((tmp_path / "ph.pgm.meta.json").read_text())
    assert meta["command"] == "phantom" and meta["inputs"]["size"] == 32

    mask = tmp_path / "m.pgm"
    assert _run("mask", "--kind", "random", "--rate", 0.25, "--seed", 4,
                "--size", "32x32", "--output", mask) == 0
    known = read_pgm(mask) > 0
    assert int(known.sum()) == round(0.25 * 32 * 32)


def test_psnr_command(tmp_path, capsys):
    a = tmp_path / "a.pgm"
    b = tmp_path / "b.pgm"
    img = make_phantom("texture", 16)
    write_pgm(img, a)
    write_pgm(img, b)
    assert _run("psnr", "--input", a, "--ref", b) == 0
    out = capsys.readouterr().out
    assert "inf" in out


def test_inpaint_end_to_end(tmp_path, capsys):
    truth = tmp_path / "t.pgm"
    mask = tmp_path / "m.pgm"
    out = tmp_path / "rec.pgm"
    trace = tmp_path / "trace.csv"
    _run("phantom", "--kind", "texture", "--size", 24, "--output", truth)
    _run("mask", "--kind", "random", "--rate", 0.5, "--seed", 1,
         "--size", "24x24", "--output", mask)
    code = _run("inpaint", "--input", truth, "--mask", mask, "--output", out,
                "--ref", truth, "--trace-out", trace, "--patch-size", 5,
                "--knn", 8, "--mu", 0.05, "--outer", 2, "--inner", 3,
                "--seed", 7)
    assert code == 0
    rec = read_pgm(out)
    assert rec.shape == (24, 24)
    lines = trace.read_text().splitlines()
    assert lines[0] == "iter,objective,residual"
    assert len(lines) == 1 + 2 * 3
    printed = capsys.readouterr().out
    assert printed.startswith("psnr_db=")
    meta = json.loads((tmp_path / "rec.pgm.meta.json").read_text())
    assert meta["options"]["mu"] == 0.05
    assert meta["options"]["patch-size"] == 5


def test_inpaint_harmonic_method(tmp_path):
    truth = tmp_path / "t.pgm"
    mask = tmp_path / "m.pgm"
    out = tmp_path / "h.pgm"
    _run("phantom", "--kind", "disk", "--size", 24, "--output", truth)
    _run("mask", "--kind", "random", "--rate", 0.6, "--seed", 2,
         "--size", "24x24", "--output", mask)
    assert _run("inpaint", "--input", truth, "--mask", mask, "--output", out,
                "--method", "harmonic", "--patch-size", 5, "--knn", 8,
                "--seed", 0) == 0
    assert read_pgm(out).shape == (24, 24)


def test_inpaint_reproducible_bitwise(tmp_path):
    truth = tmp_path / "t.pgm"
    mask = tmp_path / "m.pgm"
    _run("phantom", "--kind", "texture", "--size", 20, "--output", truth)
    _run("mask", "--kind", "random", "--rate", 0.5, "--seed", 3,
         "--size", "20x20", "--output", mask)
    outs = []
    for name in ("r1.pgm", "r2.pgm"):
        out = tmp_path / name
        _run("inpaint", "--input", truth, "--mask", mask, "--output", out,
             "--patch-size", 3, "--knn", 6, "--mu", 0.1, "--outer", 2,
             "--inner", 2, "--seed", 11)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_config_file_with_cli_override(tmp_path):
    truth = tmp_path / "t.pgm"
    mask = tmp_path / "m.pgm"
    out = tmp_path / "rec.pgm"
    cfg = tmp_path / "run.cfg"
    _run("phantom", "--kind", "texture", "--size", 16, "--output", truth)
    _run("mask", "--kind", "grid", "--stride", 2, "--size", "16x16",
         "--output", mask)
    cfg.write_text("# solver defaults\nmu=0.25\nouter=1\ninner=2\npatch-size=3\nknn=4\n")
    assert _run("inpaint", "--input", truth, "--mask", mask, "--output", out,
                "--config", cfg, "--mu", 0.5) == 0
    meta = json.loads((tmp_path / "rec.pgm.meta.json").read_text())
    assert meta["options"]["mu"] == 0.5  # flag wins
    assert meta["options"]["outer"] == 1  # from config


def test_config_file_errors_with_line_numbers(tmp_path, capsys):
    truth = tmp_path / "t.pgm"
    mask = tmp_path / "m.pgm"
    cfg = tmp_path / "bad.cfg"
    _run("phantom", "--kind", "disk", "--size", 16, "--output", truth)
    _run("mask", "--kind", "grid", "--stride", 2, "--size", "16x16",
         "--output", mask)
    cfg.write_text("mu=0.5\nbogus=1\n")
    code = _run("inpaint", "--input", truth, "--mask", mask,
                "--output", tmp_path / "x.pgm", "--config", cfg)
    assert code == 2
    assert "bad.cfg:2" in capsys.readouterr().err


def test_superres_grid_and_average(tmp_path):
    low = tmp_path / "low.pgm"
    write_pgm(make_phantom("texture", 12), low)
    for mode in ("grid", "average"):
        out = tmp_path / f"up_{mode}.pgm"
        code = _run("superres", "--input", low, "--factor", 2, "--mode", mode,
                    "--output", out, "--patch-size", 3, "--knn", 6,
                    "--mu", 0.2, "--mu2", 20, "--outer", 1, "--inner", 2,
                    "--seed", 0)
        assert code == 0
        assert read_pgm(out).shape == (24, 24)


def test_project_then_ct_round_trip(tmp_path, capsys):
    img = tmp_path / "ph.pgm"
    sino = tmp_path / "sino.csv"
    mtx = tmp_path / "a.mtx"
    rec = tmp_path / "rec.pgm"
    _run("phantom", "--kind", "disk", "--size", 16, "--output", img)
    assert _run("project", "--input", img, "--views", 10, "--detectors", 24,
                "--output", sino, "--matrix-out", mtx) == 0
    assert read_sinogram(sino).shape == (10, 24)
    a = read_matrix_market(mtx)
    assert a.shape == (240, 256)
    meta = json.loads((tmp_path / "sino.csv.meta.json").read_text())
    assert meta["derived"]["views"] == 10

    code = _run("ct", "--input", sino, "--size", 16, "--output", rec,
                "--method", "ls", "--ls-iters", 150, "--ref", img)
    assert code == 0
    printed = capsys.readouterr().out
    db = float(printed.strip().split("=", 1)[1])
    assert db > 20.0

    rec2 = tmp_path / "rec2.pgm"
    code = _run("ct", "--input", sino, "--size", 16, "--output", rec2,
                "--matrix", mtx, "--patch-size", 3, "--knn", 6,
                "--mu", 0.05, "--mu2", 5.0, "--outer", 2, "--inner", 4,
                "--seed", 1)
    assert code == 0
    assert read_pgm(rec2).shape == (16, 16)


def test_ssl_command(tmp_path, capsys):
    imgs, labels = make_digit_set(300, seed=9)
    data = tmp_path / "imgs.idx"
    lab = tmp_path / "labels.idx"
    write_idx(data, imgs)
    write_idx(lab, labels)
    out = tmp_path / "est.csv"
    acc = tmp_path / "acc.csv"
    code = _run("ssl", "--data", data, "--labels", lab, "--labeled", 20,
                "--knn", 8, "--mu", 5.0, "--outer", 3, "--inner", 3,
                "--seed", 2, "--output", out, "--accuracy-out", acc)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,label" and len(lines) == 301
    header, row = acc.read_text().splitlines()
    assert header == "n,labeled,correct,accuracy"
    n, labeled, correct, accuracy = row.split(",")
    assert int(n) == 300 and int(labeled) == 20
    assert math.isclose(float(accuracy), int(correct) / 300)
    printed = capsys.readouterr().out
    assert "accuracy=" in printed


def test_exit_codes(tmp_path):
    # format error: malformed PGM
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"months")
    assert _run("psnr", "--input", bad, "--ref", bad) == 4
    # invalid argument: mask without size
    assert _run("mask", "--kind", "random", "--rate", 0.5,
                "--output", tmp_path / "m.pgm") == 2
    # missing file
    assert _run("psnr", "--input", tmp_path / "nope.pgm",
                "--ref", tmp_path / "nope.pgm") == 2
    # argparse rejects unknown choices with exit code 2
    with pytest.raises(SystemExit) as exc:
        main(["phantom", "--kind", "wat", "--size", "16", "--output", "x"])
    assert exc.value.code == 2
