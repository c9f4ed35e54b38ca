"""Command-line front end: ``gammaflow parse|convert|run|check-equiv|dot``.

Command output goes to stdout and is byte-identical for identical inputs
and seeds; logs and diagnostics go to stderr.

Exit codes:
    0  success, or every seed pair agrees
    1  usage, I/O, parse, validation or conversion error
    2  execution fault (division by zero, token collision, ...)
    3  divergence between the dataflow and Gamma runs
    4  budget exhausted, or a check left pairs inconclusive
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from enum import StrEnum
from pathlib import Path
from typing import Annotated

import click
import typer

from gammaflow import pipeline
from gammaflow.config import RunConfig, Settings
from gammaflow.element_text import parse_elements, parse_tokens
from gammaflow.errors import (
    BoundExceededError,
    ExecutionFault,
    GammaflowError,
    NotTerminatedError,
)
from gammaflow.models import Element, RunStatus, SourceKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAULT = 2
EXIT_DIVERGED = 3
EXIT_BUDGET = 4


class OutputFormat(StrEnum):
    TEXT = "text"
    JSON = "json"


app = typer.Typer(
    name="gammaflow",
    help="Convert dynamic dataflow graphs to Gamma programs and back, run both, compare them.",
    no_args_is_help=True,
    add_completion=False,
)

KindOption = Annotated[
    SourceKind | None,
    typer.Option(
        "--kind", help="Input kind; detected from the extension (.df, .gamma, .mset) by default."
    ),
]
FormatOption = Annotated[OutputFormat, typer.Option("--format", help="Output format.")]
SeedOption = Annotated[int | None, typer.Option("--seed", help="PRNG seed [env: GAMMAFLOW_SEED].")]
MaxStepsOption = Annotated[
    int | None,
    typer.Option("--max-steps", min=0, help="Firing / reaction budget per run."),
]
InputsOption = Annotated[
    Path | None,
    typer.Option("--inputs", help="Inputs file of 'token <value> <label> <tag>' lines."),
]
SetOption = Annotated[
    list[str] | None,
    typer.Option("--set", help="Override a Source value: NODE=VALUE (repeatable)."),
]


@app.callback()
def _configure(
    log_level: Annotated[
        str | None,
        typer.Option(
            "--log-level", help="DEBUG, INFO, WARNING or ERROR [env: GAMMAFLOW_LOG_LEVEL]."
        ),
    ] = None,
) -> None:
    # stdout carries command output only
    level = (log_level or Settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        force=True,
    )


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map library errors onto the documented exit codes."""
    try:
        yield
    except ExecutionFault as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(EXIT_FAULT) from exc
    except (BoundExceededError, NotTerminatedError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(EXIT_BUDGET) from exc
    except (GammaflowError, OSError, UnicodeDecodeError, ValueError, KeyError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE) from exc


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _tokens(path: Path | None) -> list[Element]:
    return parse_tokens(_read(path)) if path is not None else []


def _emit(text: str) -> None:
    typer.echo(text, nl=False)


def _config(seed: int | None, max_steps: int | None, trace: bool | None = None) -> RunConfig:
    return RunConfig.from_settings(
        Settings(), seed=seed, max_steps=max_steps, max_reactions=max_steps, trace=trace
    )


@app.command("parse")
def cmd_parse(
    path: Annotated[Path, typer.Argument(help="Graph, Gamma or multiset file.")],
    kind: KindOption = None,
    output_format: FormatOption = OutputFormat.TEXT,
) -> None:
    """Parse a file and print its canonical form."""
    with _exit_codes():
        parsed = pipeline.parse_source(_read(path), pipeline.detect_kind(path, kind))
        if output_format is OutputFormat.JSON:
            _emit(parsed.model_dump_json(indent=2) + "\n")
            return
        _emit(parsed.canonical)
        typer.echo(f"# {parsed.summary}")


@app.command("convert")
def cmd_convert(
    path: Annotated[Path, typer.Argument(help="Graph (.df) or Gamma (.gamma) file.")],
    kind: KindOption = None,
    out: Annotated[
        Path | None, typer.Option("--out", help="Directory to write the produced files into.")
    ] = None,
    fuse: Annotated[
        bool, typer.Option("--fuse", help="Apply chain fusion to the program.")
    ] = False,
    instantiate: Annotated[
        bool,
        typer.Option("--instantiate", help="Replicate each reaction graph over the multiset."),
    ] = False,
    whole: Annotated[
        bool, typer.Option("--whole", help="Rebuild one graph for the whole program.")
    ] = False,
    relabel: Annotated[
        bool, typer.Option("--relabel", help="Generate n<node>_o<k> labels.")
    ] = False,
    multiset: Annotated[
        Path | None, typer.Option("--multiset", help="Elements to instantiate over.")
    ] = None,
    inputs: InputsOption = None,
    assignments: SetOption = None,
    output_format: FormatOption = OutputFormat.TEXT,
) -> None:
    """Convert a graph to Gamma (df2gamma) or a Gamma program to graphs (gamma2df)."""
    with _exit_codes():
        result = pipeline.convert_source(
            _read(path),
            pipeline.detect_kind(path, kind),
            stem=path.stem,
            fuse=fuse,
            instantiate=instantiate,
            whole=whole,
            relabel=relabel,
            inputs=_tokens(inputs),
            overrides=pipeline.parse_overrides(assignments or []),
            multiset=parse_elements(_read(multiset)) if multiset is not None else None,
        )
        for report in result.reports:
            typer.echo(f"{report.source_summary} -> {report.target_summary}", err=True)
        if output_format is OutputFormat.JSON:
            _emit(result.model_dump_json(indent=2) + "\n")
            return
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            for name, text in result.files.items():
                (out / name).write_text(text, encoding="utf-8")
                typer.echo(str(out / name))
            return
        for name, text in result.files.items():
            typer.echo(f"# file: {name}")
            _emit(text)


@app.command("run")
def cmd_run(
    path: Annotated[Path, typer.Argument(help="Graph (.df) or Gamma (.gamma) file.")],
    kind: KindOption = None,
    seed: SeedOption = None,
    max_steps: MaxStepsOption = None,
    trace: Annotated[bool, typer.Option("--trace", help="Include the full trace.")] = False,
    exhaustive: Annotated[
        bool,
        typer.Option("--exhaustive", help="Explore every schedule and list the terminal outcomes."),
    ] = False,
    inputs: InputsOption = None,
    assignments: SetOption = None,
    multiset: Annotated[
        Path | None, typer.Option("--multiset", help="Initial multiset for a Gamma program.")
    ] = None,
    output_format: FormatOption = OutputFormat.TEXT,
) -> None:
    """Execute a graph or a Gamma program under a seeded schedule."""
    with _exit_codes():
        if exhaustive:
            explored = pipeline.explore_source(
                _read(path),
                pipeline.detect_kind(path, kind),
                _config(seed, max_steps),
                inputs=_tokens(inputs),
                overrides=pipeline.parse_overrides(assignments or []),
                multiset=parse_elements(_read(multiset)) if multiset is not None else None,
            )
            json_output = output_format is OutputFormat.JSON
            _emit(explored.render_json() if json_output else explored.render_text())
            return
        report = pipeline.run_source(
            _read(path),
            pipeline.detect_kind(path, kind),
            _config(seed, max_steps, trace or None),
            inputs=_tokens(inputs),
            overrides=pipeline.parse_overrides(assignments or []),
            multiset=parse_elements(_read(multiset)) if multiset is not None else None,
        )
    _emit(report.render_json() if output_format is OutputFormat.JSON else report.render_text())
    if report.status is RunStatus.BUDGET_EXHAUSTED:
        raise typer.Exit(EXIT_BUDGET)


@app.command("check-equiv")
def cmd_check(
    path: Annotated[Path, typer.Argument(help="Graph (.df) or Gamma (.gamma) file.")],
    kind: KindOption = None,
    seeds: Annotated[int, typer.Option("--seeds", min=1, help="Number of seeds per side.")] = 5,
    seed: SeedOption = None,
    max_steps: MaxStepsOption = None,
    inputs: InputsOption = None,
    assignments: SetOption = None,
    corrupt: Annotated[bool, typer.Option("--corrupt", hidden=True)] = False,
    output_format: FormatOption = OutputFormat.TEXT,
) -> None:
    """Run a graph and its Gamma translation under several seeds and compare results."""
    with _exit_codes():
        config = _config(seed, max_steps)
        report = pipeline.check_source(
            _read(path),
            pipeline.detect_kind(path, kind),
            config,
            list(range(config.seed, config.seed + seeds)),
            inputs=_tokens(inputs),
            overrides=pipeline.parse_overrides(assignments or []),
            corrupt=corrupt,
        )
    _emit(report.render_json() if output_format is OutputFormat.JSON else report.render_text())
    if report.divergences:
        raise typer.Exit(EXIT_DIVERGED)
    if report.inconclusive:
        raise typer.Exit(EXIT_BUDGET)


@app.command("dot")
def cmd_dot(
    path: Annotated[Path, typer.Argument(help="Graph (.df) or Gamma (.gamma) file.")],
    kind: KindOption = None,
    reaction: Annotated[
        str | None, typer.Option("--reaction", help="Draw only this reaction's graph.")
    ] = None,
    whole: Annotated[
        bool, typer.Option("--whole", help="Draw the graph rebuilt from the whole program.")
    ] = False,
) -> None:
    """Print GraphViz DOT for a graph or for the graphs of a program's reactions."""
    with _exit_codes():
        source_kind = pipeline.detect_kind(path, kind)
        _emit(pipeline.dot_source(_read(path), source_kind, reaction=reaction, whole=whole))


def main() -> None:
    """Console entry point; click usage errors exit with code 1."""
    try:
        code = app(standalone_mode=False)
    except click.exceptions.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else EXIT_OK)


if __name__ == "__main__":
    main()
