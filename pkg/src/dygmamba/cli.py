"""Command-line entry point: ``dygmamba {synth,train,eval,edgebank,bench}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Failures also write a JSON error record to stderr and ``<out>/error.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import doubling_ratios, scaling_run, write_bench_csv
from .config import RunConfig, load_config
from .edgebank import edgebank_reports
from .errors import CheckpointError, ConfigError, DyGMambaError
from .graph_store import chronological_split, load_graph
from .model import init_model, load_model
from .synth import synth_dataset
from .trainer import evaluate, summarize, train

log = logging.getLogger("dygmamba")

USAGE_ERRORS = (ConfigError, CheckpointError, FileNotFoundError)


def build_parser():
    parser = argparse.ArgumentParser(prog="dygmamba", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synth", "train", "eval", "edgebank", "bench"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--data", help="edge CSV with header src,dst,ts")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="run a single seed (overrides seeds)")
        sp.add_argument("--rho", type=int)
        sp.add_argument("--patch", type=int, dest="p")
        sp.add_argument("--k", type=int)
        sp.add_argument("--d", type=int)
        sp.add_argument("--variant", choices=("full", "a", "b"))
        sp.add_argument("--nss", choices=("random", "historical", "inductive"))
        sp.add_argument("--setting", choices=("transductive", "inductive"))
    return parser


def resolve_config(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in ("data", "out", "rho", "p", "k", "d", "variant",
                                               "nss", "setting")}
    if args.seed is not None:
        overrides["seed"] = args.seed
        overrides["seeds"] = (args.seed,)
    return load_config(args.config, overrides)


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _snapshot(cfg, out):
    (out / "config.resolved").write_text(cfg.to_text(), encoding="utf-8")


def load_data(cfg: RunConfig):
    if cfg.data is not None:
        if not Path(cfg.data).is_file():
            raise FileNotFoundError(f"dataset not found: {cfg.data}")
        return load_graph(cfg.data, cfg.node_features, cfg.edge_features, d_N=cfg.d_N, d_E=cfg.d_E)
    return synth_dataset(cfg.synth_num_pairs, cfg.synth_period, cfg.synth_decay,
                         cfg.synth_noise_edges, cfg.synth_horizon, cfg.seed,
                         cfg.synth_noise_nodes, d_N=cfg.d_N, d_E=cfg.d_E)


def _split(cfg, g):
    return chronological_split(g, cfg.ratios, cfg.unseen_fraction, cfg.seed)


def _write_jsonl(path, records):
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write((r if isinstance(r, str) else json.dumps(r, sort_keys=True)) + "\n")


# ---------------------------------------------------------------- commands

def cmd_synth(cfg: RunConfig):
    if cfg.synth_num_pairs is None:
        cfg.synth_num_pairs = 40
    cfg.validate()
    out = _out_dir(cfg)
    g = synth_dataset(cfg.synth_num_pairs, cfg.synth_period, cfg.synth_decay,
                      cfg.synth_noise_edges, cfg.synth_horizon, cfg.seed,
                      cfg.synth_noise_nodes, d_N=cfg.d_N, d_E=cfg.d_E, out_dir=out)
    _snapshot(cfg, out)
    log.info("wrote %d interactions to %s", len(g), out / "edges.csv")


def cmd_train(cfg: RunConfig):
    cfg.validate(need_data=True)
    out = _out_dir(cfg)
    _snapshot(cfg, out)
    g = load_data(cfg)
    split = _split(cfg, g)
    reports = []
    for seed in cfg.seeds:
        run_dir = out / f"seed_{seed}"
        run_dir.mkdir(exist_ok=True)
        model = init_model(cfg.model_config(seed))
        model, hist = train(model, g, split, cfg.epochs_max, cfg.patience, cfg.batch_size, cfg.lr,
                            seed, checkpoint_path=run_dir / "model.ckpt",
                            history_path=run_dir / "history.csv", log=log.info)
        rep = evaluate(model, g, split, cfg.setting, cfg.nss, seed, cfg.batch_size)
        reports.append(rep)
        log.info("seed %d: best epoch %d, test AP %.4f, AUC %.4f", seed, hist.best_epoch, rep.ap, rep.auc)
    _write_jsonl(out / "reports.jsonl", [r.to_json() for r in reports])
    _write_jsonl(out / "summary.jsonl", summarize(reports))


def cmd_eval(cfg: RunConfig):
    cfg.validate(need_data=True)
    out = _out_dir(cfg)
    _snapshot(cfg, out)
    paths = ([Path(cfg.checkpoint)] if cfg.checkpoint is not None
             else [out / f"seed_{s}" / "model.ckpt" for s in cfg.seeds])
    models = [load_model(p) for p in paths]
    g = load_data(cfg)
    split = _split(cfg, g)
    reports = []
    for seed, model in zip(cfg.seeds, models):
        rep = evaluate(model, g, split, cfg.setting, cfg.nss, seed, cfg.batch_size)
        reports.append(rep)
        log.info("seed %d: AP %.4f, AUC %.4f over %d queries", seed, rep.ap, rep.auc, rep.num_queries)
    _write_jsonl(out / "eval_reports.jsonl", [r.to_json() for r in reports])
    _write_jsonl(out / "eval_summary.jsonl", summarize(reports))


def cmd_edgebank(cfg: RunConfig):
    cfg.validate(need_data=True)
    out = _out_dir(cfg)
    _snapshot(cfg, out)
    g = load_data(cfg)
    split = _split(cfg, g)
    records = []
    for seed in cfg.seeds:
        reports, best = edgebank_reports(g, split, cfg.setting, cfg.nss, seed, cfg.edgebank_thresh)
        for strategy, rep in reports.items():
            rec = json.loads(rep.to_json())
            rec["model"] = f"edgebank_{strategy}"
            if strategy == "max":
                rec["best_strategy"] = best
            records.append(rec)
            log.info("edgebank %-9s seed %d: AP %s", strategy, seed, rec["ap"])
    _write_jsonl(out / "edgebank_reports.jsonl", records)


def cmd_bench(cfg: RunConfig):
    out = _out_dir(cfg)
    _snapshot(cfg, out)
    results = scaling_run(cfg.bench_lengths, cfg.bench_width, cfg.bench_reps, cfg.seed)
    write_bench_csv(out / "bench.csv", results)
    for kernel, ratios in doubling_ratios(results).items():
        log.info("%s doubling ratios: %s", kernel, ", ".join(f"{r:.2f}" for r in ratios))


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "eval": cmd_eval,
            "edgebank": cmd_edgebank, "bench": cmd_bench}


def _error_record(command, exc, out):
    kind = getattr(exc, "kind", type(exc).__name__)
    rec = {"status": "error", "command": command, "kind": kind, "message": str(exc)}
    text = json.dumps(rec, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    out = args.out
    try:
        cfg = resolve_config(args)
        out = cfg.out
        COMMANDS[args.command](cfg)
    except USAGE_ERRORS as exc:
        _error_record(args.command, exc, out)
        return 2
    except (DyGMambaError, OSError, ValueError, FloatingPointError) as exc:
        _error_record(args.command, exc, out)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
