"""``ngcl`` command-line entry point.

Commands compose through file artifacts: ``synth``/``build-graphs`` emit a
graph dataset, ``pretrain`` an encoder checkpoint plus loss trace,
``finetune`` a classifier checkpoint, ``evaluate`` the cross-validation
report with ROC/attention/embedding records, and ``report`` renders the
aggregate table. Exit codes: 0 success, 1 usage, 2 data error, 3
numeric/training error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .. import evaluation, signalio
from ..connectivity import multiband_graph
from ..biomarkers import node_feature_matrix
from ..contrastive import pretrain
from ..encoder import GraphEncoder
from ..errors import DataError, MissingArtifactError, NgclError, NumericError
from ..gatclassifier import TopKGat, finetune, predict, predict_batch
from ..graphbuild import build_graph
from .config import apply_overrides, dump_config, load_config
from .dataset import load_graphs, save_graphs
from .synth import synth_graph_dataset

logger = logging.getLogger("ngcl")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

REPORT_MAGIC = "#ngcl-report v1"
REPORT_COLUMNS = ("fold", "tp", "fp", "tn", "fn", "acc", "sen", "spe", "ppv", "npv", "auc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _fmt(value) -> str:
    return "undef" if value is None else repr(float(value))


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ngcl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable; beats the file)")

    p = sub.add_parser("config", help="print the effective configuration")
    common(p)

    p = sub.add_parser("synth", help="generate a synthetic two-class graph dataset")
    common(p)
    p.add_argument("--out", required=True, help="output .gds path")

    p = sub.add_parser("build-graphs", help="build labeled graphs from recordings")
    common(p)
    p.add_argument("--out", required=True, help="output .gds path")
    p.add_argument("recordings", nargs="+", help="recording .csv paths (with .meta sidecars)")

    p = sub.add_parser("pretrain", help="contrastively pretrain the encoder")
    common(p)
    p.add_argument("--data", required=True, help="input .gds dataset")
    p.add_argument("--out", required=True, help="encoder checkpoint path (.npz)")
    p.add_argument("--trace", help="loss-trace output (epoch,batch,l_graph,l_info,l_total)")

    p = sub.add_parser("finetune", help="train the classifier on frozen embeddings")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--encoder", required=True, help="pretrained encoder checkpoint")
    p.add_argument("--out", required=True, help="classifier checkpoint path (.npz)")
    p.add_argument("--trace", help="loss-trace output (epoch,mean_bce)")

    p = sub.add_parser("evaluate", help="run k-fold cross-validation and export artifacts")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--encoder", required=True, help="encoder checkpoint (for exports)")
    p.add_argument("--gat", required=True, help="classifier checkpoint (for exports)")
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("report", help="render an evaluation report as a table")
    p.add_argument("--report", required=True, help="report file from 'evaluate'")
    return parser


def _load_cfg(args):
    cfg = load_config(args.config)
    return apply_overrides(cfg, args.overrides)


def _cmd_config(args) -> int:
    sys.stdout.write(dump_config(_load_cfg(args)))
    return EXIT_OK


def _cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    graphs = synth_graph_dataset(
        n_per_class=cfg.synth_n_per_class,
        n_nodes=cfg.synth_n_nodes,
        soz_size=cfg.synth_soz_size,
        noise=cfg.synth_noise,
        seed=cfg.seed,
    )
    save_graphs(graphs, args.out)
    logger.info("wrote %d graphs to %s", len(graphs), args.out)
    return EXIT_OK


def _cmd_build_graphs(args) -> int:
    cfg = _load_cfg(args)
    bands = cfg.band_list()
    graphs = []
    failures = 0
    for rec_path in args.recordings:
        try:
            rec = signalio.load_recording(rec_path)
            inter, ictal = signalio.clip_peri_ictal(rec, cfg.pre_s, cfg.post_s)
            for clip, label in ((inter, 0), (ictal, 1)):
                for seg in signalio.segment_windows(clip, cfg.window_s, cfg.overlap, label):
                    conn = multiband_graph(seg, bands, p=cfg.mvar_order,
                                           normalized=cfg.dtf_normalized)
                    graphs.append(build_graph(conn, node_feature_matrix(seg), label))
        except NgclError as exc:
            failures += 1
            logger.error("skipping %s: %s", rec_path, exc)
    if not graphs:
        raise DataError("no recording could be processed")
    save_graphs(graphs, args.out)
    logger.info("wrote %d graphs to %s (%d files failed)", len(graphs), args.out, failures)
    return EXIT_DATA if failures else EXIT_OK


def _cmd_pretrain(args) -> int:
    cfg = _load_cfg(args)
    graphs = load_graphs(args.data)
    enc, trace = pretrain(graphs, cfg.pretrain_config(), cfg.policy(), seed=cfg.seed)
    enc.save(args.out)
    if args.trace:
        lines = ["epoch,batch,l_graph,l_info,l_total"]
        lines += [f"{e},{b},{lg!r},{li!r},{lt!r}" for e, b, lg, li, lt in trace.records]
        Path(args.trace).write_text("\n".join(lines) + "\n")
    logger.info("pretrained %d epochs; final mean loss %.6f",
                len(trace.epoch_means), trace.epoch_means[-1] if trace.epoch_means else float("nan"))
    return EXIT_OK


def _cmd_finetune(args) -> int:
    cfg = _load_cfg(args)
    graphs = load_graphs(args.data)
    enc = GraphEncoder.load(args.encoder)
    gat, epoch_means = finetune(graphs, enc, cfg.gat_config(), seed=cfg.seed)
    gat.save(args.out)
    if args.trace:
        lines = ["epoch,mean_bce"] + [f"{e},{v!r}" for e, v in enumerate(epoch_means)]
        Path(args.trace).write_text("\n".join(lines) + "\n")
    logger.info("fine-tuned %d epochs; final BCE %.6f",
                len(epoch_means), epoch_means[-1] if epoch_means else float("nan"))
    return EXIT_OK


def _write_report(path, result) -> None:
    lines = [REPORT_MAGIC, ",".join(REPORT_COLUMNS)]
    for r in result.folds:
        c = r.counts
        lines.append(",".join([
            str(r.fold_index), str(c.tp), str(c.fp), str(c.tn), str(c.fn),
            _fmt(r.acc), _fmt(r.sen), _fmt(r.spe), _fmt(r.ppv), _fmt(r.npv), _fmt(r.auc),
        ]))
    for stat, pick in (("mean", 0), ("sd", 1)):
        row = [stat, "", "", "", ""]
        for name in ("acc", "sen", "spe", "ppv", "npv", "auc"):
            agg = result.aggregate.get(name)
            row.append("undef" if agg is None else repr(agg[pick]))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    graphs = load_graphs(args.data)
    enc = GraphEncoder.load(args.encoder)      # required artifacts for the exports
    gat = TopKGat.load(args.gat)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    result = evaluation.cross_validate(
        graphs,
        cfg.pretrain_config(),
        cfg.gat_config(),
        cfg.policy(),
        k=cfg.k_folds,
        seed=cfg.seed,
        threshold=cfg.threshold,
    )
    _write_report(outdir / "report.txt", result)

    roc_lines = ["fold,fpr,tpr"]
    for r in result.folds:
        roc_lines += [f"{r.fold_index},{fpr!r},{tpr!r}" for fpr, tpr in r.roc]
    (outdir / "roc.csv").write_text("\n".join(roc_lines) + "\n")

    # interpretability exports from the supplied trained model
    import torch

    with torch.no_grad():
        emb_lines = ["graph,label," + ",".join(f"v{i}" for i in range(enc.hidden))]
        for gi, g in enumerate(graphs):
            node_emb = enc.encode_nodes(g.adjacency, g.features.values, train_mode=False)
            vec = enc.encode_graph(node_emb).numpy()
            emb_lines.append(f"{gi},{g.label}," + ",".join(repr(float(v)) for v in vec))
    (outdir / "embeddings.csv").write_text("\n".join(emb_lines) + "\n")

    for label, name in ((0, "attention_interictal.csv"), (1, "attention_ictal.csv")):
        first = next((g for g in graphs if g.label == label), None)
        if first is None:
            continue
        _, amap = predict(first, enc, gat)
        att_lines = ["layer,head,src,dst,weight"]
        att_lines += [f"{l},{h},{i},{j},{w!r}" for l, h, i, j, w in amap.iter_records()]
        (outdir / name).write_text("\n".join(att_lines) + "\n")

    scores = predict_batch(graphs, enc, gat)
    _, whole = evaluation.confusion_metrics(scores, [g.label for g in graphs], cfg.threshold)
    logger.info("evaluate: CV mean acc %.4f; supplied-model whole-set acc %s",
                result.aggregate["acc"][0], _fmt(whole["acc"]))
    return EXIT_OK


def _cmd_report(args) -> int:
    path = Path(args.report)
    if not path.exists():
        raise MissingArtifactError(f"report not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != REPORT_MAGIC:
        raise DataError(f"{path}: not an evaluation report")
    rows = [line.split(",") for line in lines[1:] if line]
    widths = [max(len(r[i]) if i < len(r) else 0 for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(val.ljust(widths[i]) for i, val in enumerate(r)))
    return EXIT_OK


_COMMANDS = {
    "config": _cmd_config,
    "synth": _cmd_synth,
    "build-graphs": _cmd_build_graphs,
    "pretrain": _cmd_pretrain,
    "finetune": _cmd_finetune,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except DataError as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    except NumericError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
