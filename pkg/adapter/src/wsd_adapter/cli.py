import logging
import sys

import click

from .annotate import (
    annotate_with_model,
    annotate_with_rules,
    read_parallel_tsv,
    write_records,
)
from .lexicon import load_lexicon


@click.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="Tab-separated source/target sentence pairs.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Annotated corpus output, one JSON record per line.")
@click.option("--backend", type=click.Choice(["rule", "model"]), default="rule",
              show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True),
              help="Rule lexicon file (rule backend).")
@click.option("--base-url", help="Annotation endpoint (model backend).")
@click.option("--src-lang", default="en", show_default=True)
@click.option("--tgt-lang", default="es", show_default=True)
@click.option("--id-prefix", default="s", show_default=True)
@click.option("--batch-size", default=32, show_default=True)
def main(input_path, out_path, backend, lexicon_path, base_url,
         src_lang, tgt_lang, id_prefix, batch_size):
    """Annotate parallel text with word senses."""
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s")

    with open(input_path, encoding="utf-8") as fh:
        pairs, diagnostics = read_parallel_tsv(fh)
    for diag in diagnostics:
        click.echo(f"line {diag.line}: {diag.message}", err=True)

    if backend == "rule":
        if not lexicon_path:
            raise click.UsageError("--lexicon is required with the rule backend")
        records = annotate_with_rules(
            pairs, load_lexicon(lexicon_path), src_lang, tgt_lang, id_prefix
        )
    else:
        if not base_url:
            raise click.UsageError("--base-url is required with the model backend")
        records, model_diags = annotate_with_model(
            pairs, base_url, src_lang, tgt_lang, id_prefix, batch_size
        )
        diagnostics = diagnostics + model_diags

    write_records(records, out_path)
    click.echo(f"{len(records)} records written, {len(diagnostics)} diagnostics")


if __name__ == "__main__":
    main()
