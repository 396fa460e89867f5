import json

import pytest

from pfdg.cli import build_parser, load_config, main


def _run(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["-q", "--problem", "ex51", "--k", "1", "--n-list", "10,20", "--out", str(out), *extra])
    return code, out


def test_success_exit_code(tmp_path):
    code, out = _run(tmp_path, "a")
    assert code == 0
    assert (out / "table_ex51_k1.csv").exists()


def test_outputs_are_deterministic(tmp_path):
    _, a = _run(tmp_path, "a")
    _, b = _run(tmp_path, "b")
    fa = sorted(p.name for p in a.iterdir())
    assert fa == sorted(p.name for p in b.iterdir())
    for name in fa:
        if name == "manifest.txt":
            continue
        assert (a / name).read_bytes() == (b / name).read_bytes()
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("config:")]
    assert strip(a / "manifest.txt") != [] and len(strip(a / "manifest.txt")) == len(strip(b / "manifest.txt"))


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "ex51", "k": [2], "dt": 0.1, "out": "x"}))
    args = build_parser().parse_args(["--config", str(cfg), "--dt", "0.05"])
    c = load_config(args)
    assert c.k == (2,) and c.dt == 0.05 and c.out == "x"


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "ex51", "unknown_key": 1}))
    assert main(["-q", "--config", str(cfg)]) == 2
    cfg.write_text("not json")
    assert main(["-q", "--config", str(cfg)]) == 2
    assert main(["-q", "--problem", "ex51", "--n-list", "10,15"]) == 2


def test_failing_tags_exit_code(tmp_path):
    code = main(["-q", "--problem", "ex55", "--k", "1", "--beta0", "0", "--n-list", "10,20", "--out", str(tmp_path)])
    # order on a coarse ladder is above the suboptimality threshold
    assert code == 1


def test_unknown_problem_rejected_by_parser():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--problem", "ex99"])
