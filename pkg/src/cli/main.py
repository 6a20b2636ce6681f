"""FairTrade command line.

Every subcommand writes its outputs plus ``<out>.config.json``, the resolved
configuration it ran with; ``fairtrade replay <file>`` runs it again.

Exit codes: 0 success, 2 invalid input or config, 3 numerical abort, 4 black-box
adapter failure.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.audit import (
    BuiltinKind,
    HttpAdapter,
    ProcessAdapter,
    feature_columns,
    run_audit,
    train_builtin,
)
from src.cevae import (
    CevaeModel,
    decoding_summary,
    load_checkpoint,
    save_checkpoint,
    train,
)
from src.cli.config import DgpKind, PipelineConfig, build_scm, load_config, write_resolved
from src.config import settings
from src.dataset import Dataset, DistKind
from src.errors import AdapterError, ContractError, NumericalAbort
from src.fairpred import (
    AuxPredictor,
    InputSelection,
    accuracy,
    baselines,
    build_inputs,
    load_aux,
    outcome_labels,
    parse_selections,
    predict,
    save_aux,
    sweep,
    train_aux,
)
from src.graph import check_identifiability, parse_paths
from src.metrics import (
    bimodality_coefficient,
    latent_gap_hook,
    oracle_cf,
    oracle_pscf,
    statistical_parity_score,
)
from src.schemas import (
    IdentifiabilityReport,
    MetricReport,
    PseReport,
    load_graph,
    read_json,
    write_json,
)
from src.scm import LinearScm, NestedCounterfactual, pse, sample_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_ADAPTER = 4


# --- Helpers ---


def _config(args: argparse.Namespace) -> PipelineConfig:
    """Config file (or defaults) with command-line overrides applied and validated."""
    doc = load_config(args.config).model_dump(mode="json")
    for key in ("graph", "dgp", "n", "seed", "repetitions", "jobs", "base_a"):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    for key in ("epochs", "batch_size", "learning_rate", "latent_dim"):
        value = getattr(args, key, None)
        if value is not None:
            doc["train"][key] = value
    if getattr(args, "selections", None):
        doc["selections"] = args.selections
    # one root seed; every stage derives named substreams from it
    doc["train"]["seed"] = doc["seed"]
    doc["aux"]["seed"] = doc["seed"]
    return PipelineConfig.model_validate(doc)


def _arguments(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _resolved(out: Path, args: argparse.Namespace, config: PipelineConfig) -> None:
    write_resolved(_sidecar(out, ".config.json"), args.command, _arguments(args), config)


def _adapter(spec: str, model: CevaeModel, train_data: Dataset | None,
             config: PipelineConfig, seed: int):
    columns = feature_columns(model)
    if spec.startswith("cmd:"):
        return ProcessAdapter(spec[len("cmd:"):], columns)
    if spec.startswith(("http://", "https://")):
        return HttpAdapter(spec, columns)
    if spec.startswith("builtin:"):
        try:
            kind = BuiltinKind(spec[len("builtin:"):])
        except ValueError:
            raise ContractError(
                f"Unknown builtin black box {spec!r}; valid: {[k.value for k in BuiltinKind]}"
            ) from None
        if train_data is None:
            raise ContractError("Builtin black boxes need --train data")
        frame = train_data.to_frame()
        labels = outcome_labels(model.graph, train_data)
        return train_builtin(
            kind, frame, labels, columns, model.layout.sensitive, config.aux, seed
        )
    raise ContractError(
        f"Unknown adapter {spec!r}; use builtin:lr|lr_fixed_a|rf, cmd:<command> or an http URL"
    )


# --- Subcommands ---


def cmd_gen_data(args: argparse.Namespace) -> None:
    config = _config(args)
    scm = build_scm(config)
    data = sample_dataset(scm, config.n, config.seed)
    out = Path(args.out)
    data.save(out, with_noise=not args.no_noise)
    y = data.node(scm.graph.outcome)
    if y.shape[1] == 1 and scm.mechanisms[scm.graph.outcome].kind == DistKind.GAUSSIAN:
        logger.info("Outcome bimodality coefficient: %.4f", bimodality_coefficient(y))
    _resolved(out, args, config)


def cmd_train_cevae(args: argparse.Namespace) -> None:
    config = _config(args)
    data = Dataset.load(args.data)
    graph = load_graph(config.graph)
    model = CevaeModel.build(graph, data.profile, config.train)
    hooks = [latent_gap_hook(data)]
    out = Path(args.out)
    try:
        result = train(model, data, config.train, hooks)
    except NumericalAbort as err:
        if err.checkpoint is not None:
            write_json(_sidecar(out, ".last-good.json"), err.checkpoint)
        raise
    save_checkpoint(model, out, result.rows)
    pd.DataFrame(result.rows).to_csv(_sidecar(out, ".epochs.csv"), index=False)
    decoding_summary(model, data, seed=config.seed).to_csv(
        _sidecar(out, ".decoding.csv"), index=False
    )
    _resolved(out, args, config)


def cmd_train_aux(args: argparse.Namespace) -> None:
    config = _config(args)
    model = load_checkpoint(args.checkpoint)
    data = Dataset.load(args.data)
    selection = InputSelection.parse(args.selection, config.base_a)
    x = build_inputs(model, data, selection, seed=config.seed)
    aux = train_aux(x, outcome_labels(model.graph, data), config.aux, selection)
    out = Path(args.out)
    save_aux(aux, out)
    scored = Dataset.load(args.test) if args.test else data
    x_scored = build_inputs(model, scored, selection, seed=config.seed)
    preds = pd.DataFrame({"record_id": np.arange(scored.n), "y_hat": predict(aux, x_scored)})
    preds.to_csv(_sidecar(out, ".predictions.csv"), index=False)
    logger.info(
        "Accuracy on %s: %.4f", "test data" if args.test else "training data",
        accuracy(aux, x_scored, outcome_labels(model.graph, scored)),
    )
    _resolved(out, args, config)


def cmd_sweep(args: argparse.Namespace) -> None:
    config = _config(args)
    model = load_checkpoint(args.checkpoint)
    data = Dataset.load(args.data)
    selections = parse_selections(config.selections, config.base_a)
    table, runs = sweep(
        model, data, selections, config.aux, config.repetitions, config.train_fraction,
        config.seed, config.jobs,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    runs.to_csv(_sidecar(out, ".runs.csv"), index=False)
    if args.baselines:
        baselines(
            model.graph, data, config.aux, config.repetitions, config.train_fraction,
            config.seed, config.jobs,
        ).to_csv(_sidecar(out, ".baselines.csv"), index=False)
    _resolved(out, args, config)


def cmd_eval(args: argparse.Namespace) -> None:
    config = _config(args)
    model = load_checkpoint(args.checkpoint)
    aux = load_aux(args.aux)
    if aux.selection is None:
        raise ContractError(f"{args.aux} was not trained on an input selection")
    data = Dataset.load(args.data)
    x = build_inputs(model, data, aux.selection, seed=config.seed)
    y = outcome_labels(model.graph, data)
    reports = []
    for metric in config.metrics:
        if metric == "accuracy":
            value = accuracy(aux, x, y)
            reports.append(MetricReport(metric=metric, value=value, n=data.n))
        elif metric == "sp":
            value = statistical_parity_score(predict(aux, x), data.node(model.layout.sensitive))
            reports.append(MetricReport(metric=metric, value=value, n=data.n))
        elif metric in ("oracle_cf", "oracle_pscf"):
            scm = build_scm(config)
            predictor = AuxPredictor(model, aux)
            n = min(config.mc_samples, args.oracle_n or config.mc_samples)
            if metric == "oracle_cf":
                value = oracle_cf(predictor, scm, n, config.seed)
                reports.append(MetricReport(metric=metric, mode="mean_abs", value=value, n=n,
                                            seed=config.seed))
            else:
                pi = parse_paths(args.paths or "")
                value = oracle_pscf(predictor, scm, pi, n, config.seed)
                reports.append(MetricReport(metric=metric, mode="mean_abs", value=value, n=n,
                                            seed=config.seed))
        else:
            raise ContractError(
                f"Unknown metric {metric!r}; valid: accuracy, sp, oracle_cf, oracle_pscf"
            )
        logger.info("%s = %.4f", metric, reports[-1].value)
    out = Path(args.out)
    write_json(out, [r.model_dump(mode="json") for r in reports])
    _resolved(out, args, config)


def cmd_pse(args: argparse.Namespace) -> None:
    config = _config(args)
    if args.dgp is None and args.graph:
        config = config.model_copy(update={"dgp": DgpKind.LINEAR})
    scm = build_scm(config)
    pi = parse_paths(args.paths)
    nc = NestedCounterfactual(pi, args.active, args.base)
    estimate = pse(scm, nc, config.n, config.seed)
    closed_form = None
    if isinstance(scm, LinearScm) and not config.linear.binary_outcome:
        closed_form = (args.active - args.base) * sum(scm.path_coefficient(p) for p in pi)
    report = PseReport(
        graph=scm.graph.name,
        paths=sorted(str(p) for p in pi),
        active=args.active,
        base=args.base,
        value=estimate.value,
        stderr=estimate.stderr,
        n=estimate.n,
        seed=config.seed,
        closed_form=closed_form,
    )
    out = Path(args.out)
    write_json(out, report)
    _resolved(out, args, config)


def cmd_identifiability(args: argparse.Namespace) -> None:
    graph = load_graph(args.graph)
    pi = parse_paths(args.paths)
    result = check_identifiability(graph, pi)
    report = IdentifiabilityReport(
        graph=graph.name,
        paths=sorted(str(p) for p in pi),
        identifiable=result.identifiable,
        witness=result.witness,
        conflict=[str(p) for p in result.conflict] if result.conflict else None,
    )
    logger.info(
        "%s on %s: %s", report.paths, graph.name,
        "identifiable" if report.identifiable else f"not identifiable (witness {report.witness})",
    )
    print(report.model_dump_json())
    if args.out:
        out = Path(args.out)
        write_json(out, report)
        _resolved(out, args, PipelineConfig(graph=args.graph))


def cmd_audit(args: argparse.Namespace) -> None:
    config = _config(args)
    model = load_checkpoint(args.checkpoint)
    test = Dataset.load(args.data)
    train_data = Dataset.load(args.train) if args.train else None
    adapter = _adapter(args.adapter, model, train_data, config, config.seed)
    report = run_audit(
        model, test, adapter, seed=config.seed, repetitions=config.repetitions, jobs=config.jobs,
    )
    out = Path(args.out)
    write_json(out, report)
    _sidecar(out, ".txt").write_text(report.summary + "\n")
    _resolved(out, args, config)


def cmd_replay(args: argparse.Namespace) -> None:
    doc = read_json(args.resolved)
    replayed = _parser().parse_args([doc["command"]] + _argv(doc["arguments"]))
    replayed.config = args.resolved
    replayed.func(replayed)


def _argv(arguments: dict) -> list[str]:
    """Command-line form of recorded arguments; pipeline values come from the file."""
    argv = []
    for key, value in arguments.items():
        if key in ("command", "log_level") or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag] + [str(v) for v in value]
        else:
            argv += [flag, str(value)]
    return argv


# --- Parser ---


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairtrade", description="Causal fairness estimation and black-box audits"
    )
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", default=None, help="TOML or JSON pipeline config")
        p.add_argument("--seed", type=int, default=None, help="Root seed of all randomness")
        return p

    p = command("gen-data", cmd_gen_data, "Sample a synthetic dataset")
    p.add_argument("--dgp", choices=[d.value for d in DgpKind], default=None)
    p.add_argument("--graph", default=None, help="Graph for the linear DGP")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--no-noise", action="store_true", help="Omit exogenous noise columns")
    p.add_argument("--out", required=True, help="CSV path; the schema is written next to it")

    p = command("train-cevae", cmd_train_cevae, "Train a CEVAE on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--latent-dim", type=int, default=None)
    p.add_argument("--out", required=True, help="Checkpoint JSON path")

    p = command("train-aux", cmd_train_aux, "Train a fair auxiliary predictor")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test", default=None, help="Dataset to write predictions for")
    p.add_argument("--selection", required=True, help="e.g. Z,B,R*")
    p.add_argument("--base-a", type=float, default=None, help="Base value a' for R*")
    p.add_argument("--out", required=True)

    p = command("sweep", cmd_sweep, "Accuracy/parity sweep over input selections")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--selections", nargs="+", default=None)
    p.add_argument("--base-a", type=float, default=None)
    p.add_argument("--repetitions", "--reps", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--baselines", action="store_true", help="Also report MLP and LR baselines")
    p.add_argument("--out", required=True, help="Summary CSV path")

    p = command("eval", cmd_eval, "Metrics of a trained auxiliary predictor")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--aux", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--dgp", choices=[d.value for d in DgpKind], default=None)
    p.add_argument("--graph", default=None)
    p.add_argument("--paths", default=None, help="Path set for oracle_pscf")
    p.add_argument("--oracle-n", type=int, default=None)
    p.add_argument("--out", required=True)

    p = command("pse", cmd_pse, "Monte-Carlo path-specific effect on a known SCM")
    p.add_argument("--graph", default=None)
    p.add_argument("--dgp", choices=[d.value for d in DgpKind], default=None)
    p.add_argument("--paths", required=True)
    p.add_argument("--active", type=float, default=1.0)
    p.add_argument("--base", type=float, default=0.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("identifiability", help="Recanting-witness check for a path set")
    p.set_defaults(func=cmd_identifiability)
    p.add_argument("--graph", required=True)
    p.add_argument("--paths", required=True, help='e.g. "A>X>Y,A>R>Y"; empty for none')
    p.add_argument("--out", default=None)

    p = command("audit", cmd_audit, "Counterfactual audit of a black box")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="Held-out test CSV")
    p.add_argument("--train", default=None, help="Training CSV for builtin black boxes")
    p.add_argument("--adapter", required=True)
    p.add_argument("--repetitions", "--reps", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="Run a command again from its resolved config")
    p.set_defaults(func=cmd_replay)
    p.add_argument("resolved")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(), format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    try:
        args.func(args)
    except (ContractError, ValidationError) as err:
        logger.error("Invalid input: %s", err)
        return EXIT_INVALID
    except NumericalAbort as err:
        logger.error("Numerical abort: %s", err)
        return EXIT_NUMERICAL
    except AdapterError as err:
        logger.error("Black box failed after %d completed repetition(s): %s",
                     len(err.partial_log), err)
        return EXIT_ADAPTER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
