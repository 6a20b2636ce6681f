"""End-to-end black-box scoring simulation.

Samples the appendix data, trains a CEVAE on the training split, then audits a
logistic regression, a logistic regression with a constant sensitive input and a
random forest on the held-out split. Everything is written as data under --out-dir.
"""

import argparse
import logging
from pathlib import Path

import pandas as pd

from src.audit import (
    BuiltinKind,
    audit_table,
    describe_report,
    feature_columns,
    run_audit,
    train_builtin,
)
from src.cevae import CevaeModel, TrainConfig, decoding_summary, save_checkpoint, train
from src.config import settings
from src.dataset import split_dataset
from src.fairpred import outcome_labels
from src.metrics import latent_gap_hook
from src.rng import child_seed
from src.schemas import write_json
from src.scm import AppendixDgpParams, appendix_dgp, sample_dataset

logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
logger = logging.getLogger(__name__)


def run(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    scm = appendix_dgp(AppendixDgpParams())
    data = sample_dataset(scm, args.n, args.seed)
    split_seed = child_seed(args.seed, "split")
    train_data, test_data = split_dataset(data, settings.train_fraction, split_seed)
    train_data.save(out_dir / "train.csv", with_noise=True)
    test_data.save(out_dir / "test.csv", with_noise=True)

    config = TrainConfig(epochs=args.epochs, seed=args.seed)
    model = CevaeModel.build(scm.graph, train_data.profile, config)
    result = train(model, train_data, config, hooks=[latent_gap_hook(test_data)])
    save_checkpoint(model, out_dir / "cevae.json", result.rows)
    pd.DataFrame(result.rows).to_csv(out_dir / "epochs.csv", index=False)
    decoding_summary(model, test_data, seed=args.seed).to_csv(
        out_dir / "decoding.csv", index=False
    )

    columns = feature_columns(model)
    frame = train_data.to_frame()
    labels = outcome_labels(scm.graph, train_data)
    reports = []
    for kind in BuiltinKind:
        seed = child_seed(args.seed, kind.value)
        adapter = train_builtin(kind, frame, labels, columns, scm.graph.sensitive, seed=seed)
        report = run_audit(
            model, test_data, adapter, seed=args.seed, repetitions=args.reps, jobs=args.jobs
        )
        write_json(out_dir / f"audit_{kind.value}.json", report)
        reports.append(report)

    lr = reports[0]
    for report in reports[1:]:
        logger.info("%s", describe_report(report, reference=lr))
    audit_table(reports).to_csv(out_dir / "audit.csv", index=False)
    logger.info("Simulation outputs written to %s", out_dir)


def main():
    parser = argparse.ArgumentParser(description="FairTrade black-box scoring simulation")
    parser.add_argument("--n", type=int, default=10_000, help="Number of simulated records")
    parser.add_argument("--epochs", type=int, default=TrainConfig().epochs, help="CEVAE epochs")
    parser.add_argument(
        "--reps", type=int, default=settings.repetitions, help="Audit repetitions per model"
    )
    parser.add_argument("--jobs", type=int, default=settings.jobs, help="Worker threads")
    parser.add_argument("--seed", type=int, default=0, help="Root seed")
    parser.add_argument(
        "--out-dir",
        type=str,
        default=str(Path(settings.output_dir) / "simulation"),
        help="Directory for all outputs",
    )

    args = parser.parse_args()
    run(args)


if __name__ == "__main__":
    main()
