"""Command-line entry point binding the whole pipeline.

Subcommands: synth, extract-kb, train, eval, explain, counterfactual,
extract-kg, ged, audit. Options may come from a JSON config file
(--config, or the XPARTS_CONFIG env var); explicit flags win. Exit codes:
0 success, 1 validation error, 2 I/O or format error, 3 numeric failure.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import classifier, data, kb as kb_mod, kg as kg_mod
from .errors import FormatError, NumericError, ValidationError
from .explain import audit_self_explaining, counterfactual_scan, explain
from .lsp import NoiseConfig, PredictorConfig
from .pipeline import (evaluate, ground_truth_vectors, report_to_records,
                       report_to_text)


def _load_config(path):
    if path is None:
        path = os.environ.get("XPARTS_CONFIG")
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad config JSON: {exc}", str(path))


def _cfg_default(ctx, key, fallback):
    value = ctx.obj.get(key, fallback)
    return value


@click.group()
@click.option("--config", type=click.Path(), default=None,
              help="JSON config file with option defaults.")
@click.pass_context
def main(ctx, config):
    """Part-based transparent classification pipeline."""
    ctx.obj = _load_config(config)


def _opt(ctx, name, flag_value):
    """Flag wins; config file supplies the default otherwise."""
    if flag_value is not None:
        return flag_value
    return ctx.obj.get(name)


@main.command()
@click.option("--kb", "kb_path", type=click.Path(exists=True), default=None,
              help="Expert KB file (defaults to the bundled MonuMAI KB).")
@click.option("--n-per-class", type=int, default=None)
@click.option("--p-omit", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def synth(ctx, kb_path, n_per_class, p_omit, seed, out):
    """Generate a KB-faithful synthetic dataset manifest."""
    kb = (kb_mod.load_kb(kb_path) if kb_path
          else kb_mod.monumai_expert_kb())
    n = _opt(ctx, "n_per_class", n_per_class) or 100
    noise = data.SynthNoiseConfig(p_omit=_opt(ctx, "p_omit", p_omit) or 0.0)
    ds = data.synth_generate(kb, n, noise, seed=_opt(ctx, "seed", seed) or 0)
    data.save_dataset(ds, out)
    click.echo(f"wrote {len(ds.samples)} samples to {out}")


@main.command("extract-kb")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--min-support", type=float, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def extract_kb_cmd(ctx, data_path, min_support, out):
    """Triplify a dataset into a knowledge base file."""
    ds = data.load_dataset(data_path)
    kb = kb_mod.extract_kb(ds, _opt(ctx, "min_support", min_support) or 0.0)
    kb_mod.save_kb(kb, out)
    click.echo(f"wrote {len(kb.tbox)} TBox and {len(kb.abox)} ABox triples "
               f"to {out}")


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--model", "model_kind",
              type=click.Choice(["logreg", "nb"]), default="logreg")
@click.option("--lr", type=float, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--tol", type=float, default=None)
@click.option("--l2", type=float, default=None)
@click.option("--bias/--no-bias", default=False)
@click.option("--out", type=click.Path(), default=None,
              help="Model file (logreg only).")
@click.pass_context
def train(ctx, data_path, model_kind, lr, epochs, tol, l2, bias, out):
    """Train the transparent classifier on ground-truth vectors."""
    ds = data.load_dataset(data_path)
    X, y = ground_truth_vectors(ds)
    if model_kind == "nb":
        model = classifier.train_nb(X, y, ds.class_vocab, ds.attr_vocab)
        acc = classifier.accuracy_nb(model, X, y)
        click.echo(f"naive-bayes training accuracy: {acc:.6f}")
        return
    cfg = classifier.TrainConfig(
        learning_rate=_opt(ctx, "lr", lr) or classifier.STABLE_LEARNING_RATE,
        max_epochs=_opt(ctx, "epochs", epochs) or 5000,
        loss_tolerance=_opt(ctx, "tol", tol) if tol is not None else 1e-9,
        l2_penalty=_opt(ctx, "l2", l2) if l2 is not None else 1e-4)
    model = classifier.train_logreg(X, y, ds.class_vocab, ds.attr_vocab,
                                    cfg, use_bias=bias)
    acc = classifier.accuracy(model, X, y)
    click.echo(f"logreg training accuracy: {acc:.6f}")
    if out:
        classifier.save_model(model, out)
        click.echo(f"wrote model to {out}")


def _predictor_from_flags(kind, pred_dir, p_drop_instance, p_drop_attribute,
                          p_spurious, seed):
    if kind == "noisy":
        noise = NoiseConfig(p_drop_instance=p_drop_instance or 0.0,
                            p_drop_attribute=p_drop_attribute or 0.0,
                            p_spurious=p_spurious or 0.0,
                            seed=seed or 0)
        return PredictorConfig("noisy", noise=noise)
    if kind == "file":
        return PredictorConfig("file", prediction_dir=pred_dir)
    return PredictorConfig("oracle")


@main.command("eval")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--predictor", type=click.Choice(["oracle", "file", "noisy"]),
              default="oracle")
@click.option("--pred-dir", type=click.Path(), default=None)
@click.option("--p-drop-instance", type=float, default=None)
@click.option("--p-drop-attribute", type=float, default=None)
@click.option("--p-spurious", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--tau", type=float, default=0.5)
@click.option("--min-pixels", type=int, default=1)
@click.option("--out", type=click.Path(), required=True,
              help="Report basename; writes <out>.txt and <out>.jsonl.")
def eval_cmd(data_path, model_path, predictor, pred_dir, p_drop_instance,
             p_drop_attribute, p_spurious, seed, tau, min_pixels, out):
    """Evaluate a trained model over a dataset."""
    ds = data.load_dataset(data_path)
    model = classifier.load_model(model_path)
    predictor_cfg = _predictor_from_flags(
        predictor, pred_dir, p_drop_instance, p_drop_attribute,
        p_spurious, seed)
    vect_cfg = data.VectorizeConfig(tau=tau, min_pixels=min_pixels)
    report = evaluate(ds, predictor_cfg, model, vect_cfg)
    Path(f"{out}.txt").write_text(
        report_to_text(report, model.class_vocab.names), encoding="utf-8")
    Path(f"{out}.jsonl").write_text(report_to_records(report),
                                    encoding="utf-8")
    click.echo(f"accuracy {report.accuracy:.6f}; wrote {out}.txt and "
               f"{out}.jsonl")


def _vector_from_flags(model, bits, attrs):
    if (bits is None) == (attrs is None):
        raise ValidationError("give exactly one of --bits or --attrs")
    if bits is not None:
        values = tuple(int(v) for v in bits.split(","))
        return data.AttributeVector(values)
    names = [n.strip() for n in attrs.split(",") if n.strip()]
    ids = [model.attr_vocab.id_of(n) for n in names]
    return data.AttributeVector.from_ids(ids, model.n_attrs)


@main.command("explain")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--bits", default=None, help="Comma-separated 0/1 vector.")
@click.option("--attrs", default=None, help="Comma-separated attribute names.")
@click.option("--sample-id", default="cli")
def explain_cmd(model_path, bits, attrs, sample_id):
    """Explain the prediction for one attribute vector."""
    model = classifier.load_model(model_path)
    z = _vector_from_flags(model, bits, attrs)
    e = explain(model, z, sample_id)
    click.echo(e.text)


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--bits", default=None)
@click.option("--attrs", default=None)
@click.option("--max-flips", type=int, default=2)
def counterfactual(model_path, bits, attrs, max_flips):
    """List minimal attribute flips that change the prediction."""
    model = classifier.load_model(model_path)
    z = _vector_from_flags(model, bits, attrs)
    results = counterfactual_scan(model, z, max_flips)
    if not results:
        click.echo(f"no class change within {max_flips} flips")
        return
    for r in results:
        names = ", ".join(
            ("+" if z.bits[j] == 0 else "-") + model.attr_vocab.name_of(j + 1)
            for j in r.flips)
        new_name = model.class_vocab.name_of(r.new_class)
        click.echo(f"flip [{names}] -> {new_name} "
                   f"(old-class prob {r.old_prob:.4f} -> {r.new_prob:.4f})")


@main.command("extract-kg")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--epsilon", type=float, default=kg_mod.DEFAULT_EPSILON)
@click.option("--out", type=click.Path(), required=True)
@click.option("--dot", "dot_out", type=click.Path(), default=None)
def extract_kg_cmd(model_path, epsilon, out, dot_out):
    """Extract the attribute-class graph from model weights."""
    model = classifier.load_model(model_path)
    graph = kg_mod.extract_kg(model, epsilon)
    Path(out).write_text(kg_mod.kg_to_edge_list(graph), encoding="utf-8")
    if dot_out:
        Path(dot_out).write_text(kg_mod.kg_to_dot(graph), encoding="utf-8")
    click.echo(f"wrote {len(graph.edges)} edges to {out}")


@main.command("ged")
@click.argument("graph_a", type=click.Path(exists=True))
@click.argument("graph_b", type=click.Path(exists=True))
def ged_cmd(graph_a, graph_b):
    """Edit distance between two edge-list graph files."""
    a = kg_mod.parse_edge_list(Path(graph_a).read_text(encoding="utf-8"))
    b = kg_mod.parse_edge_list(Path(graph_b).read_text(encoding="utf-8"))
    result = kg_mod.ged(a, b)
    click.echo(f"distance {result.distance}")
    for op, payload in result.edit_script:
        click.echo(f"  {op} {payload}")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--kb", "kb_path", type=click.Path(exists=True), default=None,
              help="Expert KB (defaults to the bundled MonuMAI KB).")
@click.option("--epsilon", type=float, default=kg_mod.DEFAULT_EPSILON)
@click.option("--out", type=click.Path(), default=None)
def audit(model_path, kb_path, epsilon, out):
    """Validity (graph distance to expert KB) and self-explaining audits."""
    model = classifier.load_model(model_path)
    kb = kb_mod.load_kb(kb_path) if kb_path else kb_mod.monumai_expert_kb()
    valid, result = kg_mod.audit_validity(model, kb, epsilon)
    self_expl = audit_self_explaining(model)
    lines = [f"valid: {str(valid).lower()}",
             f"graph-edit-distance: {result.distance}",
             f"self-explaining: {str(self_expl).lower()}"]
    for op, payload in result.edit_script:
        lines.append(f"edit: {op} {payload}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


def run():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (FormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except NumericError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    run()
