"""Command-line interface for batch workflows."""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import bn, evaluation, learning, pipeline
from .domain import (
    DEFAULT_DOMAIN,
    DomainError,
    PCM_PRESETS,
    SCHEME_BAND,
    SCHEME_COUNT,
    TypeScores,
    build_student_net,
    expert_classify,
    scores_to_evidence,
    uniform_priors,
)
from .fixtures import table2_priors


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


def _parse_pcm(value: str) -> float:
    if value in PCM_PRESETS:
        return PCM_PRESETS[value]
    try:
        pcm = float(value)
    except ValueError:
        raise _fail(f"pcm must be a number or one of {sorted(PCM_PRESETS)}")
    if not 0.0 <= pcm <= 1.0:
        raise _fail("pcm must be in [0, 1]")
    return pcm


def _resolve_priors(spec: str, prior_class: str | None = None) -> dict[str, float]:
    if prior_class is not None:
        if prior_class not in DEFAULT_DOMAIN.fine_classes:
            raise _fail(f"unknown class {prior_class!r}")
        return {c: 1.0 if c == prior_class else 0.0 for c in DEFAULT_DOMAIN.fine_classes}
    if spec == "uniform":
        return uniform_priors()
    if spec == "table2":
        return table2_priors()
    try:
        with open(spec, encoding="utf-8") as fh:
            return pipeline.parse_priors(fh.read())
    except OSError as exc:
        raise _fail(f"cannot read priors file {spec!r}: {exc}")
    except pipeline.ParseError as exc:
        raise _fail(str(exc))


def _read_scores(path: str) -> list[TypeScores]:
    try:
        with open(path, encoding="utf-8") as fh:
            return pipeline.parse_type_scores(fh.read())
    except OSError as exc:
        raise _fail(f"cannot read {path!r}: {exc}")
    except pipeline.ParseError as exc:
        raise _fail(str(exc))


scheme_option = click.option(
    "--scheme",
    type=click.Choice([SCHEME_COUNT, SCHEME_BAND]),
    default=SCHEME_BAND,
    show_default=True,
)
pcm_option = click.option("--pcm", default="0.11", show_default=True,
                          help="Careless-mistake probability or preset low/mid/high.")
priors_option = click.option("--priors", default="uniform", show_default=True,
                             help="uniform, table2, or a priors CSV path.")


@click.group()
def main() -> None:
    """Decimal-misconception diagnosis toolkit."""


@main.command("build-net")
@scheme_option
@pcm_option
@priors_option
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def build_net_cmd(scheme: str, pcm: str, priors: str, output: str) -> None:
    """Build the expert student network and write it as JSON."""
    net = build_student_net(scheme, _parse_pcm(pcm), _resolve_priors(priors))
    bn.save(net, output)
    click.echo(f"wrote {output}")


@main.command("expert-classify")
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def expert_classify_cmd(scores_file: str, output: str | None) -> None:
    """Apply the expert rules to a type-scores file."""
    lines = ["student_id,expert_class"]
    for s in _read_scores(scores_file):
        lines.append(f"{s.student_id},{expert_classify(s)}")
    text = "\n".join(lines) + "\n"
    _emit(text, output)


@main.command("classify")
@scheme_option
@pcm_option
@priors_option
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def classify_cmd(scheme: str, pcm: str, priors: str, scores_file: str, output: str | None) -> None:
    """Diagnose each student with the Bayesian model; emits the MAP class
    and the full ranked posterior."""
    net = build_student_net(scheme, _parse_pcm(pcm), _resolve_priors(priors))
    lines = ["student_id,map_class,ranked"]
    for s in _read_scores(scores_file):
        evidence = scores_to_evidence(s, scheme)
        post = bn.posterior(net, evidence, "fineClass")
        ranked = bn.rank_classes(post)
        rendered = ";".join(f"{c}:{p:.6f}" for c, p in ranked)
        lines.append(f"{s.student_id},{ranked[0][0]},{rendered}")
    _emit("\n".join(lines) + "\n", output)


@main.command("evaluate-grid")
@click.argument("labels_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--coarse", is_flag=True, help="Use the coarse change policy.")
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def evaluate_grid_cmd(labels_file: str, coarse: bool, output: str | None) -> None:
    """Build a comparison grid from `student_id,ref,model` rows and report
    match/desirable/undesirable percentages."""
    import csv

    try:
        with open(labels_file, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise _fail(str(exc))
    if not rows or len(rows[0]) != 3:
        raise _fail("labels file must have columns student_id,ref,model")
    refs = [r[1] for r in rows[1:] if r]
    models = [r[2] for r in rows[1:] if r]
    labels = DEFAULT_DOMAIN.coarse_classes if coarse else DEFAULT_DOMAIN.fine_classes
    kind_fn = evaluation.coarse_change_kind if coarse else evaluation.change_kind
    try:
        grid = evaluation.comparison_grid(refs, models, labels)
        summary = evaluation.grid_summary(grid, kind_fn)
    except ValueError as exc:
        raise _fail(str(exc))
    text = (
        evaluation.render_grid(grid, kind_fn)
        + "\n"
        + evaluation.summary_to_text(summary)
    )
    _emit(text, output)


@main.command("evaluate-predict")
@click.option("--net", "net_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def evaluate_predict_cmd(net_path: str, scores_file: str, output: str | None) -> None:
    """Leave-one-type-out prediction report for a saved net."""
    net = bn.load(net_path)
    try:
        report = evaluation.prediction_eval(net, _read_scores(scores_file))
    except (ValueError, bn.BnError) as exc:
        raise _fail(str(exc))
    _emit(evaluation.report_to_text(report), output)


@main.command("learn-params")
@click.option("--net", "net_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Structure to refit (CPT values are ignored).")
@click.option("--alpha", default=1.0, show_default=True)
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def learn_params_cmd(net_path: str, alpha: float, scores_file: str, output: str) -> None:
    """Refit a network's CPTs from labeled type scores."""
    structure = bn.load(net_path)
    scores = _read_scores(scores_file)
    scheme = structure.meta.get("scheme", SCHEME_COUNT)
    try:
        dataset = learning.dataset_from_type_scores(scores, scheme)
        keep = [v.name for v in dataset.variables]
        # Coarse node is deterministic; refit only class and type nodes.
        sub_vars = tuple(v for v in structure.variables if v.name in keep)
        sub = bn.BayesNet(
            sub_vars,
            {v.name: structure.parents[v.name] for v in sub_vars},
            {v.name: structure.cpts[v.name] for v in sub_vars},
            meta=dict(structure.meta),
        )
        learned = learning.learn_cpts(sub, dataset, alpha=alpha)
    except learning.LearningError as exc:
        raise _fail(str(exc))
    cpts = dict(structure.cpts)
    for v in sub_vars:
        cpts[v.name] = learned.cpts[v.name]
    merged = bn.BayesNet(structure.variables, structure.parents, cpts, meta=dict(structure.meta))
    bn.save(merged, output)
    click.echo(f"wrote {output}")


@main.command("cluster")
@click.option("--k", "k_spec", default="2-8", show_default=True,
              help="Candidate class counts, e.g. '4' or '2-8' or '2,4,6'.")
@click.option("--seed", default=0, show_default=True)
@click.option("--restarts", default=5, show_default=True)
@click.argument("dct_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def cluster_cmd(k_spec: str, seed: int, restarts: int, dct_file: str, output: str | None) -> None:
    """EM mixture clustering of raw records with class-count selection."""
    try:
        with open(dct_file, encoding="utf-8") as fh:
            records = pipeline.parse_dct(fh.read())
    except pipeline.ParseError as exc:
        raise _fail(str(exc))
    if "-" in k_spec and "," not in k_spec:
        lo, hi = k_spec.split("-", 1)
        candidates = range(int(lo), int(hi) + 1)
    else:
        candidates = [int(k) for k in k_spec.split(",")]
    dataset = learning.dataset_from_dct(records)
    try:
        result = learning.select_classes(dataset, candidates, seed=seed, restarts=restarts)
    except learning.LearningError as exc:
        raise _fail(str(exc))
    header = [f"# selected_k: {result.best_k}"]
    header += [f"# score[{k}]: {result.scores[k]:.4f}" for k in sorted(result.scores)]
    header += [f"# unclassified: {result.n_unclassified}"]
    report = learning.clustering_report(result, [r.student_id for r in records])
    _emit("\n".join(header) + "\n" + report, output)


@main.command("learn-structure")
@click.option("--constrained/--unconstrained", default=True, show_default=True,
              help="Keep the class node an ancestor of every type node.")
@click.option("--scheme", type=click.Choice([SCHEME_COUNT, SCHEME_BAND]),
              default=SCHEME_COUNT, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--restarts", default=3, show_default=True)
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def learn_structure_cmd(
    constrained: bool, scheme: str, seed: int, restarts: int, scores_file: str, output: str
) -> None:
    """Greedy score-based structure search over class + type variables."""
    scores = _read_scores(scores_file)
    try:
        dataset = learning.dataset_from_type_scores(scores, scheme)
        result = learning.greedy_structure_search(
            dataset,
            constraint_root="fineClass" if constrained else None,
            seed=seed,
            restarts=restarts,
        )
    except learning.LearningError as exc:
        raise _fail(str(exc))
    bn.save(result.net, output)
    click.echo(f"wrote {output}")
    click.echo(
        f"score: {result.score.score:.4f} arcs: {len(result.arcs)} "
        f"arcs/node: {result.arcs_per_node:.2f} parameters: {result.n_params}"
    )


@main.command("simulate")
@pcm_option
@priors_option
@click.option("--prior-class", default=None, help="Point-mass prior on one class.")
@click.option("-n", "--count", "n", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def simulate_cmd(
    pcm: str, priors: str, prior_class: str | None, n: int, seed: int, output: str | None
) -> None:
    """Simulate a synthetic cohort of raw records."""
    try:
        records = pipeline.simulate_cohort(
            _resolve_priors(priors, prior_class), _parse_pcm(pcm), n, seed
        )
    except (ValueError, DomainError) as exc:
        raise _fail(str(exc))
    _emit(pipeline.format_dct(records), output)


@main.command("serve")
@click.option("--host", default=None, help="Defaults to env DCTDIAG_HOST or 127.0.0.1.")
@click.option("--port", default=None, type=int, help="Defaults to env DCTDIAG_PORT or 8008.")
def serve_cmd(host: str | None, port: int | None) -> None:  # pragma: no cover
    """Run the HTTP session service."""
    import os

    from .service import serve

    serve(
        host or os.environ.get("DCTDIAG_HOST", "127.0.0.1"),
        port or int(os.environ.get("DCTDIAG_PORT", "8008")),
    )


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":  # pragma: no cover
    main()
