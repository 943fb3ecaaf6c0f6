"""Command-line entry point: generate -> extract -> train -> eval ->
scatter -> overlap.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Primary outputs
(manifests, checkpoints, CSVs, descriptor files) are byte-stable across
reruns; anything time-dependent goes to ``run.log`` next to them. The
``ILRKIT_ENDPOINT`` environment variable supplies the default generation
endpoint when ``--endpoint`` is omitted.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from . import losses, trainer
from .descriptors import DescriptorSet, load_descriptors, save_descriptors
from .errors import IlrkitError
from .evaluation import (
    MetricConfig,
    evaluate_leave_one_in,
    format_summary,
    load_per_query_csv,
    load_relevance_file,
    save_per_query_csv,
    scatter_pairs,
)
from .overlap import mine_overlap, save_contact_sheet, save_overlap_csv
from .pipeline import ContentStore, StageClients, load_config, load_manifest, run_pipeline
from .trainer import (
    AugmentConfig,
    TrainConfig,
    extract_descriptors,
    featurize,
    load_checkpoint,
    params_fingerprint,
    save_checkpoint,
    save_train_log_csv,
    train,
)

ENDPOINT_ENV = "ILRKIT_ENDPOINT"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ilrkit", description=__doc__)
    sub = parser.add_subparsers(
        dest="command",
        required=True,
        parser_class=lambda **kw: _Parser(
            formatter_class=argparse.ArgumentDefaultsHelpFormatter, **kw
        ),
    )

    gen = sub.add_parser("generate", help="run the four-stage generation pipeline")
    gen.add_argument("--config", required=True, help="JSON generation config")
    gen.add_argument("--mock", action="store_true", help="use in-process mock clients")
    gen.add_argument("--endpoint", default=None, help="sidecar base URL")
    gen.add_argument("--seed", type=int, default=None, help="override master seed")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--threads", type=int, default=4, help="in-flight stage requests; 1 = sequential")

    tr = sub.add_parser("train", help="train the toy encoder on a manifest")
    tr.add_argument("--manifest", required=True, help="dataset manifest path")
    tr.add_argument("--store", default=None, help="content store dir (default: next to manifest)")
    tr.add_argument("--loss", default="recallk", choices=trainer.LOSS_HEADS, help="loss head")
    tr.add_argument("--epochs", type=int, default=1, help="training epochs")
    tr.add_argument("--batch-classes", type=int, default=2, metavar="B", help="classes per batch")
    tr.add_argument("--lr", type=float, default=1e-5, help="learning rate")
    tr.add_argument("--weight-decay", type=float, default=1e-6, help="decoupled weight decay")
    tr.add_argument("--seed", type=int, default=0, help="training rng seed")
    tr.add_argument("--dim", type=int, default=64, help="descriptor dimension")
    tr.add_argument("--recall-ks", default="1,2,4,8", help="recall@k loss cutoffs")
    tr.add_argument("--no-augment", action="store_true", help="disable image augmentation")
    tr.add_argument("--out", required=True, help="output directory")

    ex = sub.add_parser("extract", help="extract descriptors for an image directory")
    ex.add_argument("--checkpoint", required=True, help="encoder checkpoint")
    ex.add_argument("--images", required=True, help="directory of PNG images")
    ex.add_argument("--out", required=True, help="descriptor file to write")

    ev = sub.add_parser("eval", help="leave-one-in retrieval evaluation")
    ev.add_argument("--checkpoint", required=True, help="encoder checkpoint")
    ev.add_argument("--images", required=True, help="directory of PNG images")
    ev.add_argument("--relevance", required=True, help="relevance judgment file")
    ev.add_argument("--cutoff", type=int, default=None, help="rank cutoff (mAP@k); full mAP if omitted")
    ev.add_argument("--recall-ks", default=None, help="e.g. 1,4 for recall@1, recall@4")
    ev.add_argument("--dataset-tag", default="dataset", help="tag written into reports")
    ev.add_argument("--model-tag", default="model", help="tag written into reports")
    ev.add_argument("--out", required=True, help="output directory")

    sc = sub.add_parser("scatter", help="pair two per-query reports for plotting")
    sc.add_argument("report_a", help="first per-query CSV")
    sc.add_argument("report_b", help="second per-query CSV")
    sc.add_argument("--out", required=True, help="paired CSV path")

    ov = sub.add_parser("overlap", help="mine train/test contamination candidates")
    ov.add_argument("--test", required=True, help="query descriptor file")
    ov.add_argument("--train", required=True, help="training-set descriptor file")
    ov.add_argument("--top-m", type=int, default=20, help="pairs to report")
    ov.add_argument("--per-query", type=int, default=1, help="training matches kept per query")
    ov.add_argument("--store", default=None, help="resolve training ids to store paths")
    ov.add_argument("--out", required=True, help="output directory")
    return parser


def _load_image_dir(images_dir: str) -> list[trainer.FeatureRecord]:
    root = Path(images_dir)
    paths = sorted(root.glob("*.png"))
    if not paths:
        raise IlrkitError(f"no .png images under {images_dir}")
    return [featurize(path.stem, path.read_bytes()) for path in paths]


def _descriptors_for(checkpoint: str, images_dir: str) -> DescriptorSet:
    params = load_checkpoint(checkpoint)
    return extract_descriptors(params, _load_image_dir(images_dir))


def _parse_ks(raw: str | None) -> tuple[int, ...] | None:
    if raw is None:
        return None
    return tuple(int(part) for part in raw.split(",") if part)


def _cmd_generate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        from .pipeline.config import config_from_dict

        data = config.to_dict()
        data["master_seed"] = args.seed
        config = config_from_dict(data)
    if args.mock and args.endpoint:
        raise _UsageError("--mock and --endpoint are mutually exclusive")
    if args.mock:
        clients = StageClients.mock()
    else:
        endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise _UsageError(
                f"need --mock, --endpoint, or ${ENDPOINT_ENV} for remote generation"
            )
        clients = StageClients.http(endpoint)
    result = run_pipeline(config, clients, args.out, threads=args.threads)
    print(f"manifest\t{result.manifest_path}")
    print(f"fingerprint\t{result.manifest.fingerprint()}")
    print(f"classes\t{len(result.manifest.classes)}")
    print(f"images\t{result.manifest.image_count()}")
    return 0


def _cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    store_dir = args.store or str(Path(args.manifest).parent / "store")
    store = ContentStore(store_dir)
    config = TrainConfig(
        loss=args.loss,
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        classes_per_batch=args.batch_classes,
        rng_seed=args.seed,
        descriptor_dim=args.dim,
        augment=AugmentConfig.disabled() if args.no_augment else AugmentConfig(),
        recallk=losses.RecallKConfig(ks=_parse_ks(args.recall_ks)),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    initial = trainer.init_params(trainer.FEATURE_DIM, config.descriptor_dim, config.rng_seed)
    print(f"params_initial\t{params_fingerprint(initial)}")
    started = time.monotonic()
    params, log = train(manifest, store, config)
    checkpoint_path = out / "checkpoint.ilck"
    save_checkpoint(checkpoint_path, params)
    save_train_log_csv(out / "train_log.csv", log)
    meta = {
        "loss_head": log.loss_head,
        "config_fingerprint": log.config_fingerprint,
        "steps": len(log.entries),
        "epoch_means": log.epoch_means,
    }
    (out / "train_meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    with open(out / "run.log", "a", encoding="utf-8") as fh:
        fh.write(f"trained {len(log.entries)} steps in {time.monotonic() - started:.2f}s\n")
    print(f"params_final\t{params_fingerprint(params)}")
    print(f"checkpoint\t{checkpoint_path}")
    return 0


def _cmd_extract(args) -> int:
    dset = _descriptors_for(args.checkpoint, args.images)
    save_descriptors(args.out, dset)
    print(f"descriptors\t{args.out}")
    print(f"rows\t{len(dset)}")
    return 0


def _cmd_eval(args) -> int:
    dset = _descriptors_for(args.checkpoint, args.images)
    judgments = load_relevance_file(args.relevance)
    config = MetricConfig(cutoff=args.cutoff, recall_ks=_parse_ks(args.recall_ks))
    report, summary = evaluate_leave_one_in(
        dset, judgments, config, dataset_tag=args.dataset_tag, model_tag=args.model_tag
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_per_query_csv(out / "per_query.csv", report)
    summary_text = format_summary(summary)
    (out / "summary.txt").write_text(summary_text, encoding="utf-8")
    sys.stdout.write(summary_text)
    return 0


def _cmd_scatter(args) -> int:
    report_a = load_per_query_csv(args.report_a)
    report_b = load_per_query_csv(args.report_b)
    rows = scatter_pairs(report_a, report_b)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "ap_a", "ap_b"])
        for query_id, ap_a, ap_b in rows:
            writer.writerow([query_id, repr(ap_a), repr(ap_b)])
    print(f"pairs\t{args.out}")
    print(f"rows\t{len(rows)}")
    return 0


def _cmd_overlap(args) -> int:
    test_set = load_descriptors(args.test)
    train_set = load_descriptors(args.train)
    pairs = mine_overlap(test_set, train_set, top_m=args.top_m, per_query=args.per_query)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_overlap_csv(out / "overlap.csv", pairs)
    resolve = None
    if args.store:
        store = ContentStore(args.store)
        resolve = store.path
    save_contact_sheet(out / "contact_sheet.txt", pairs, resolve=resolve)
    print(f"overlap\t{out / 'overlap.csv'}")
    print(f"pairs\t{len(pairs)}")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "extract": _cmd_extract,
    "eval": _cmd_eval,
    "scatter": _cmd_scatter,
    "overlap": _cmd_overlap,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (IlrkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
