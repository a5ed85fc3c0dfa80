"""Command-line pipeline: validate → index → retrieve → prompt → translate →
evaluate → correlate, plus curate.

Every run writes a manifest (resolved parameters, input checksums, seed,
tool version) next to its primary output so experiments are reproducible.
Configuration precedence is flags > config file > environment; the config
file is `key = value` per line, keyed `<subcommand>.<flag>`.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import click

from . import __version__
from . import corpus as corpus_mod
from . import curation as curation_mod
from . import evaluation as eval_mod
from . import index as index_mod
from . import prompts as prompts_mod
from . import retrieval as retrieval_mod
from .client import (
    CompletionCache,
    EndpointConfig,
    load_mock_lexicon,
    mock_translate,
    translate_batch,
)
from .prompts import GenerationParams


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _write_manifest(out: Path, subcommand: str, params: dict, inputs: list[Path], seed=None) -> None:
    manifest = {
        "subcommand": subcommand,
        "parameters": {k: str(v) for k, v in sorted(params.items())},
        "input_checksums": {str(p): _sha256(Path(p)) for p in inputs},
        "seed": seed,
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    _atomic_write(out, json.dumps(manifest, indent=2) + "\n")


def _load_config(path: str | None) -> dict:
    """Parse a `section.key = value` config file into a click default_map."""
    if not path:
        path = os.environ.get("SENSEMT_CONFIG")
    if not path or not Path(path).exists():
        return {}
    defaults: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.ClickException(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
            defaults.setdefault(section, {})[name.replace("-", "_")] = value
        else:
            defaults[key.replace("-", "_")] = value
    return defaults


def _read_corpus(path: str, fail_on_diagnostics: bool = False):
    with open(path, encoding="utf-8") as fh:
        pairs, diagnostics = corpus_mod.parse_annotated_corpus(fh)
    for diag in diagnostics:
        click.echo(f"{path}: {diag}", err=True)
    if diagnostics and fail_on_diagnostics:
        raise click.ClickException(f"{len(diagnostics)} malformed line(s) in {path}")
    return pairs, diagnostics


@click.group()
@click.version_option(__version__)
@click.option("--config", type=click.Path(), default=None, help="Config file (key = value).")
@click.pass_context
def main(ctx: click.Context, config: str | None) -> None:
    """Sense-aware corpus indexing, retrieval and evaluation for MT."""
    ctx.default_map = _load_config(config)


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--format", "format", type=click.Choice(["text", "json"]), default="text")
def validate(corpus_path: str, format: str) -> None:
    """Parse a corpus file and report its statistics."""
    pairs, diagnostics = _read_corpus(corpus_path)
    report = corpus_mod.validate_corpus(pairs)
    if format == "json":
        click.echo(json.dumps({**report.__dict__, "diagnostics": len(diagnostics)}))
    else:
        click.echo(
            f"sentences={report.sentences} tokens={report.tokens} "
            f"sense_tokens={report.sense_tokens} lemmas={report.distinct_lemmas} "
            f"senses={report.distinct_senses} diagnostics={len(diagnostics)}"
        )
    if diagnostics:
        sys.exit(1)


@main.command(name="index")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--corpus-id", default="", help="Identifier recorded in the index.")
def index_cmd(corpus_path: str, out_path: str, corpus_id: str) -> None:
    """Build and persist a sense index over a corpus."""
    pairs, _ = _read_corpus(corpus_path, fail_on_diagnostics=True)
    idx = index_mod.build_index(pairs, corpus_id=corpus_id or Path(corpus_path).name)
    index_mod.save_index(idx, out_path)
    _write_manifest(
        Path(out_path).with_suffix(Path(out_path).suffix + ".manifest.json"),
        "index",
        {"corpus": corpus_path, "out": out_path, "corpus_id": corpus_id},
        [Path(corpus_path)],
    )
    click.echo(f"indexed {idx.total_sense_tokens} sense tokens -> {out_path}")


@main.command()
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True))
@click.option("--k", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option(
    "--policy",
    type=click.Choice(list(retrieval_mod.POLICIES)),
    default=retrieval_mod.MATCHED_ONLY,
)
@click.option("--out", "out_path", required=True, type=click.Path())
def retrieve(index_path, corpus_path, queries_path, k, seed, policy, out_path) -> None:
    """Retrieve same-sense demonstrations for each query sentence."""
    idx = index_mod.load_index(index_path)
    pairs, _ = _read_corpus(corpus_path, fail_on_diagnostics=True)
    corpus = corpus_mod.by_id(pairs)
    queries, _ = _read_corpus(queries_path, fail_on_diagnostics=True)

    lines = []
    matched_counts = []
    for query in queries:
        demo_set = retrieval_mod.retrieve_similar(
            query.source, idx, corpus, k=k, seed=seed, policy=policy
        )
        matched_counts.append(demo_set.matched_k)
        lines.append(
            json.dumps(
                {
                    "query_id": query.source.id,
                    "src_lang": query.src_lang,
                    "tgt_lang": query.tgt_lang,
                    "text": query.source.text,
                    "matched_k": demo_set.matched_k,
                    "fallback_used": demo_set.fallback_used,
                    "demos": [corpus_mod.pair_to_record(p) for p in demo_set.demos],
                },
                ensure_ascii=False,
            )
        )
    _atomic_write(Path(out_path), "".join(line + "\n" for line in lines))
    full = sum(1 for m in matched_counts if m == k)
    total = len(matched_counts)
    click.echo(
        f"queries={total} full_match={full} "
        f"full_match_rate={full / total if total else 0.0:.4f}"
    )
    _write_manifest(
        Path(out_path + ".manifest.json"),
        "retrieve",
        {
            "index": index_path,
            "corpus": corpus_path,
            "queries": queries_path,
            "k": k,
            "policy": policy,
            "out": out_path,
        },
        [Path(index_path), Path(corpus_path), Path(queries_path)],
        seed=seed,
    )


@main.command()
@click.option("--retrieved", "retrieved_path", required=True, type=click.Path(exists=True),
              help="Output of the retrieve subcommand.")
@click.option(
    "--template",
    type=click.Choice(list(prompts_mod.TEMPLATE_KINDS)),
    default=prompts_mod.COMPLETION,
)
@click.option("--template-file", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def prompt(retrieved_path, template, template_file, out_path) -> None:
    """Render one prompt per retrieved query (JSON object per line)."""
    templates = (
        prompts_mod.load_template_file(template_file)
        if template_file
        else prompts_mod.DEFAULT_TEMPLATES
    )
    lines = []
    with open(retrieved_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            spec = prompts_mod.PromptSpec(
                demos=tuple((d["text"], d["target"]) for d in obj["demos"]),
                test_source=obj["text"],
                src_lang=prompts_mod.display_name(obj["src_lang"]),
                tgt_lang=prompts_mod.display_name(obj["tgt_lang"]),
                template=template,
            )
            rendered = prompts_mod.render_prompt(spec, templates)
            lines.append(json.dumps({"id": obj["query_id"], "prompt": rendered}, ensure_ascii=False))
    _atomic_write(Path(out_path), "".join(line + "\n" for line in lines))
    click.echo(f"wrote {len(lines)} prompt(s) -> {out_path}")
    _write_manifest(
        Path(out_path + ".manifest.json"),
        "prompt",
        {"retrieved": retrieved_path, "template": template, "out": out_path},
        [Path(retrieved_path)],
    )


@main.command()
@click.option("--prompts", "prompts_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["mock", "http"]), default="http")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None,
              help="Mock-backend lexicon (JSON).")
@click.option("--base-url", default=None, help="HTTP backend endpoint URL.")
@click.option("--auth-env", default="", help="Env var holding the endpoint token.")
@click.option("--cache", "cache_path", type=click.Path(), default=None)
@click.option("--model", default="default")
@click.option("--beam", type=int, default=1)
@click.option("--temperature", type=float, default=1.0)
@click.option("--no-repeat-ngram", type=int, default=4)
@click.option("--max-new-tokens", type=int, default=150)
@click.option("--out", "out_path", required=True, type=click.Path())
def translate(
    prompts_path, backend, lexicon_path, base_url, auth_env, cache_path, model,
    beam, temperature, no_repeat_ngram, max_new_tokens, out_path,
) -> None:
    """Send prompts to a model (or the offline mock) and parse completions."""
    gen = GenerationParams(
        beam_size=beam,
        temperature=temperature,
        no_repeat_ngram=no_repeat_ngram,
        max_new_tokens=max_new_tokens,
    )
    ids: list[str] = []
    rendered: list[str] = []
    with open(prompts_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            ids.append(obj["id"])
            rendered.append(obj["prompt"])

    if backend == "mock":
        if not lexicon_path:
            raise click.ClickException("--lexicon is required with --backend mock")
        lexicon = load_mock_lexicon(lexicon_path)
        parsed = [
            prompts_mod.parse_completion(mock_translate(p, lexicon)) for p in rendered
        ]
        failures: list[str] = []
    else:
        if not base_url:
            raise click.ClickException("--base-url is required with --backend http")
        cfg = EndpointConfig(base_url=base_url, auth_env=auth_env)
        cache = CompletionCache(cache_path) if cache_path else None
        records = translate_batch(rendered, cfg, gen, cache=cache, model=model)
        parsed = [r.parsed for r in records]
        failures = [
            f"{pid}: {r.error}" for pid, r in zip(ids, records) if r.error is not None
        ]

    _atomic_write(
        Path(out_path),
        "".join(f"{pid}\t{text}\n" for pid, text in zip(ids, parsed)),
    )
    for failure in failures:
        click.echo(failure, err=True)
    click.echo(f"translated {len(parsed)} prompt(s) -> {out_path}")
    _write_manifest(
        Path(out_path + ".manifest.json"),
        "translate",
        {
            "prompts": prompts_path,
            "backend": backend,
            "model": model,
            "beam": beam,
            "temperature": temperature,
            "no_repeat_ngram": no_repeat_ngram,
            "max_new_tokens": max_new_tokens,
            "out": out_path,
        },
        [Path(prompts_path)],
    )
    if failures:
        sys.exit(1)


@main.command()
@click.option("--hypotheses", "hyp_path", required=True, type=click.Path(exists=True))
@click.option("--eval-set", "eval_path", required=True, type=click.Path(exists=True))
@click.option(
    "--miss-policy",
    type=click.Choice(list(eval_mod.MISS_POLICIES)),
    default=eval_mod.EXCLUDE,
)
@click.option("--format", "format", type=click.Choice(["text", "json"]), default="text")
@click.option("--out", "out_path", type=click.Path(), default=None)
def evaluate(hyp_path, eval_path, miss_policy, format, out_path) -> None:
    """Judge hypotheses against an eval set and report accuracy."""
    with open(eval_path, encoding="utf-8") as fh:
        items, diagnostics = corpus_mod.parse_eval_set(fh)
    for diag in diagnostics:
        click.echo(f"{eval_path}: {diag}", err=True)
    try:
        with open(hyp_path, encoding="utf-8") as fh:
            hypotheses = eval_mod.parse_hypotheses(fh)
    except eval_mod.EvaluationError as exc:
        raise click.ClickException(str(exc))
    extra = sorted(set(hypotheses) - {item.id for item in items})
    if extra:
        raise click.ClickException(f"hypotheses with no eval item: {', '.join(extra)}")
    report = eval_mod.evaluate_run(hypotheses, items, miss_policy=miss_policy)
    payload = {
        "items": len(items),
        "hits": report.hits,
        "errors": report.errors,
        "misses": report.misses,
        "miss_policy": report.miss_policy,
        "accuracy": report.accuracy,
        "accuracy_exclude": report.accuracy_exclude,
        "accuracy_count_as_error": report.accuracy_count_as_error,
        "verdicts": {
            iid: {"kind": v.kind, "matched": v.matched}
            for iid, v in sorted(report.verdicts.items())
        },
        "diagnostics": list(report.diagnostics),
    }
    text = (
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
        if format == "json"
        else (
            f"items={payload['items']} hits={report.hits} errors={report.errors} "
            f"misses={report.misses}\n"
            f"accuracy[{miss_policy}]={report.accuracy:.4f} "
            f"(exclude={report.accuracy_exclude:.4f}, "
            f"count-as-error={report.accuracy_count_as_error:.4f})\n"
        )
    )
    if out_path:
        _atomic_write(Path(out_path), text)
        _write_manifest(
            Path(out_path + ".manifest.json"),
            "evaluate",
            {"hypotheses": hyp_path, "eval_set": eval_path, "miss_policy": miss_policy},
            [Path(hyp_path), Path(eval_path)],
        )
    click.echo(text, nl=False)
    if diagnostics or report.diagnostics:
        sys.exit(1)


@main.command()
@click.option("--table", "table_path", required=True, type=click.Path(exists=True),
              help="CSV with a header; one row per system.")
@click.option("--accuracy-col", default="accuracy")
@click.option("--format", "format", type=click.Choice(["text", "json"]), default="text")
def correlate(table_path, accuracy_col, format) -> None:
    """Pearson correlation between accuracy and each metric column."""
    with open(table_path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        results, diagnostics = eval_mod.correlate_metrics(rows, accuracy_col=accuracy_col)
    except eval_mod.EvaluationError as exc:
        raise click.ClickException(str(exc))
    for diag in diagnostics:
        click.echo(diag, err=True)
    if format == "json":
        click.echo(
            json.dumps(
                {
                    col: {"rho": r.rho, "p_value": r.p_value, "n": r.n}
                    for col, r in results.items()
                }
            )
        )
    else:
        for col, r in results.items():
            click.echo(f"{col}: rho={r.rho:.4f} p={r.p_value:.6g} n={r.n}")
    if diagnostics:
        sys.exit(1)


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--size", "n", required=True, type=int, help="Target selection size N.")
@click.option("--holdout", type=int, default=500, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--out-dir", required=True, type=click.Path())
def curate(corpus_path, index_path, n, holdout, seed, out_dir) -> None:
    """Select N maximally ambiguous sentences and emit fine-tuning files."""
    idx = index_mod.load_index(index_path)
    pairs, _ = _read_corpus(corpus_path, fail_on_diagnostics=True)
    corpus = corpus_mod.by_id(pairs)
    try:
        ranking = curation_mod.rank_and_interleave(corpus, idx, n, seed=seed)
        train, valid = curation_mod.split_validation(ranking.selected, holdout, seed=seed)
        paths = curation_mod.emit_finetune_dataset(
            train,
            valid,
            corpus,
            out_dir,
            corpus_id=idx.corpus_id,
            index_checksum=_sha256(Path(index_path)),
            seed=seed,
            holdout=holdout,
        )
    except curation_mod.CurationError as exc:
        raise click.ClickException(str(exc))
    _write_manifest(
        Path(out_dir) / "run.manifest.json",
        "curate",
        {"corpus": corpus_path, "index": index_path, "size": n, "holdout": holdout},
        [Path(corpus_path), Path(index_path)],
        seed=seed,
    )
    click.echo(
        f"selected={len(ranking.selected)} train={len(train)} valid={len(valid)} "
        f"-> {paths['train'].parent}"
    )


if __name__ == "__main__":
    main()
