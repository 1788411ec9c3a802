import json

import pytest

from dygmamba.cli import main
from dygmamba.config import RunConfig, load_config, parse_config_text
from dygmamba.errors import ConfigError

TINY = """
# small enough to train in a second
rho = 4
p = 1
k = 2
d = 4
d_SSM = 2
l_N = 1
l_T = 1
d_N = 4
d_E = 4
d_T = 4
d_F = 3
synth_num_pairs = 6
synth_noise_edges = 60
synth_horizon = 30
epochs_max = 2
batch_size = 64
lr = 1e-3
seeds = 0,1
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(TINY)
    return path


def test_parse_and_override(cfg_file):
    vals = parse_config_text(TINY)
    assert vals["seeds"] == (0, 1) and vals["lr"] == 1e-3 and vals["synth_horizon"] == 30.0
    cfg = load_config(cfg_file, {"d": 8, "variant": "a", "out": None})
    assert cfg.d == 8 and cfg.rho == 4 and cfg.model_config().variant == "A"
    assert load_config(None) == RunConfig()


def test_snapshot_round_trips(cfg_file, tmp_path):
    cfg = load_config(cfg_file, {"out": str(tmp_path / "o")})
    (tmp_path / "snap.cfg").write_text(cfg.to_text())
    assert load_config(tmp_path / "snap.cfg") == cfg


@pytest.mark.parametrize("text", ["bogus = 1", "rho 4", "rho = 4.5", "lr = fast"])
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_both_data_sources_rejected():
    with pytest.raises(ConfigError):
        RunConfig(data="x.csv", synth_num_pairs=3).validate()
    with pytest.raises(ConfigError):
        RunConfig().validate(need_data=True)


def test_eval_missing_checkpoint_is_usage_error(cfg_file, tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["eval", "--config", str(cfg_file), "--out", str(out)])
    assert code == 2
    rec = json.loads((out / "error.json").read_text())
    assert rec["status"] == "error" and rec["command"] == "eval"
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1]) == rec


def test_bad_flag_value_exits_2(cfg_file):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--config", str(cfg_file), "--variant", "c"])
    assert exc.value.code == 2


def test_train_then_eval_round_trips(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg_file), "--out", str(out)]) == 0
    ckpt = (out / "seed_0" / "model.ckpt").read_bytes()
    assert main(["eval", "--config", str(cfg_file), "--out", str(out)]) == 0
    assert (out / "seed_0" / "model.ckpt").read_bytes() == ckpt
    trained = (out / "reports.jsonl").read_text()
    assert (out / "eval_reports.jsonl").read_text() == trained
    assert len(trained.splitlines()) == 2
    summary = json.loads((out / "summary.jsonl").read_text())
    assert summary["seeds"] == [0, 1]
    assert load_config(out / "config.resolved").seeds == (0, 1)


def test_train_is_deterministic(cfg_file, tmp_path):
    for run in ("a", "b"):
        assert main(["train", "--config", str(cfg_file), "--out", str(tmp_path / run), "--seed", "3"]) == 0
    for name in ("history.csv", "model.ckpt"):
        a = (tmp_path / "a" / "seed_3" / name).read_bytes()
        assert a == (tmp_path / "b" / "seed_3" / name).read_bytes()


def test_synth_then_edgebank(cfg_file, tmp_path):
    data = tmp_path / "data"
    assert main(["synth", "--config", str(cfg_file), "--out", str(data)]) == 0
    cfg = tmp_path / "eb.cfg"
    cfg.write_text(TINY.replace("synth_num_pairs = 6", "") + f"data = {data / 'edges.csv'}\n")
    out = tmp_path / "eb"
    assert main(["edgebank", "--config", str(cfg), "--out", str(out), "--seed", "0"]) == 0
    recs = [json.loads(x) for x in (out / "edgebank_reports.jsonl").read_text().splitlines()]
    assert [r["model"] for r in recs][-1] == "edgebank_max" and len(recs) == 5


def test_bench_command(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("bench_lengths = 8,16\nbench_width = 4\nbench_reps = 5\n")
    out = tmp_path / "b"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    assert len((out / "bench.csv").read_text().splitlines()) == 5
