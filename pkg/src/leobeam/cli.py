"""Command line entry point.

Failures print one line to stderr, ``error=<kind> key=<key> line=<n> msg=<text>``,
and exit nonzero.
"""
from __future__ import annotations

import json
import sys
import warnings
from pathlib import Path

import click

from .scenario import ALIASES, SCHEMA, ScenarioError, load_scenario

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class CliFailure(click.ClickException):
    def __init__(self, kind: str, message: str, key: str | None = None, line: int | None = None,
                 code: int = EXIT_RUNTIME):
        super().__init__(message)
        self.kind, self.key, self.line, self.exit_code = kind, key, line, code

    def format_message(self) -> str:
        parts = [f"error={self.kind}"]
        if self.key is not None:
            parts.append(f"key={self.key}")
        if self.line is not None:
            parts.append(f"line={self.line}")
        msg = " ".join(str(self.message).split())
        parts.append(f"msg={json.dumps(msg)}")
        return " ".join(parts)

    def show(self, file=None) -> None:
        click.echo(self.format_message(), err=True)


def _load(path: str):
    try:
        return load_scenario(path)
    except ScenarioError as exc:
        msg = str(exc).split(": ", 1)[-1]
        raise CliFailure("config", msg, exc.key, exc.line, EXIT_CONFIG) from None
    except FileNotFoundError:
        raise CliFailure("config", f"no such scenario: {path}", code=EXIT_CONFIG) from None


def _schema_type(dotted: str):
    node = SCHEMA
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def coerce_value(param: str, text: str):
    """Parse a command-line value with the type the scenario schema expects."""
    dotted = ALIASES.get(param, param)
    kind = _schema_type(dotted)
    if kind is None or isinstance(kind, dict):
        raise CliFailure("config", "unknown scenario parameter", dotted, code=EXIT_CONFIG)
    kinds = kind if isinstance(kind, tuple) else (kind,)
    for k in kinds:
        try:
            if k is bool:
                if text.lower() in ("true", "false"):
                    return text.lower() == "true"
                continue
            if k is int:
                return int(text)
            if k is float:
                return float(text)
            if k is str:
                return text
        except ValueError:
            continue
    raise CliFailure("config", f"cannot parse {text!r}", dotted, code=EXIT_CONFIG)


def _apply_sets(scn, sets):
    for item in sets:
        if "=" not in item:
            raise CliFailure("usage", f"--set expects key=value, got {item!r}", code=EXIT_CONFIG)
        k, v = item.split("=", 1)
        try:
            scn = scn.override(k, coerce_value(k, v))
        except ScenarioError as exc:
            raise CliFailure("config", str(exc).split(": ", 1)[-1], exc.key, exc.line, EXIT_CONFIG) from None
    return scn


def _run(scn, seed, out, epochs, dump_plans, dump_tuples, ephemeris, check_inr, backend, quiet):
    from .sim import PlanInfeasible, run_simulation

    try:
        rec = run_simulation(scn, seed=seed, out_dir=out, dump_plans=dump_plans, dump_tuples=dump_tuples,
                             ephemeris=ephemeris, check_inr=check_inr, backend=backend, epochs=epochs)
    except PlanInfeasible as exc:
        raise CliFailure("infeasible", str(exc)) from None
    s = rec.summary
    if not quiet:
        click.echo(f"run={out} label={s['label']} seed={s['seed']} epochs={s['epochs']} "
                   f"mean_revisit={s['mean_revisit']:.4f} mean_queue={s['mean_queue']:.4f} "
                   f"handover_rate={s['handover_rate']:.4f} p0={s['p0_final']:.4f}")
    return rec


class _Group(click.Group):
    """Group whose failures, usage errors included, are a single stderr line."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except CliFailure as exc:
            exc.show()
            sys.exit(exc.exit_code)
        except click.UsageError as exc:
            CliFailure("usage", exc.format_message(), code=EXIT_CONFIG).show()
            sys.exit(EXIT_CONFIG)
        except click.ClickException as exc:
            CliFailure("cli", exc.format_message(), code=exc.exit_code).show()
            sys.exit(exc.exit_code)
        except click.Abort:
            CliFailure("aborted", "interrupted", code=1).show()
            sys.exit(1)
        sys.exit(rv if isinstance(rv, int) else 0)


@click.group(cls=_Group)
@click.version_option(package_name="leobeam")
def main():
    """Beam hopping scheduler simulator for LEO constellations."""


run_options = [
    click.option("--seed", type=int, default=None, help="Run seed (defaults to the scenario's)."),
    click.option("--epochs", type=int, default=None, help="Override the epoch count."),
    click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                 help="Override a scenario key, e.g. scheduler.V=100 (repeatable)."),
    click.option("--dump-plans", is_flag=True, help="Write plans.jsonl."),
    click.option("--dump-tuples", is_flag=True, help="Write the interference tuple set per epoch."),
    click.option("--ephemeris", is_flag=True, help="Write satellite positions per epoch."),
    click.option("--no-inr-check", is_flag=True, help="Skip the realized INR audit."),
    click.option("--backend", type=click.Choice(["compiled", "python"]), default=None,
                 help="Kernel backend (default: compiled when available)."),
    click.option("--quiet", is_flag=True),
]


def _with_run_options(fn):
    for opt in reversed(run_options):
        fn = opt(fn)
    return fn


@main.command()
@click.argument("scenario")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: <output_dir>/<name>-s<seed>).")
@_with_run_options
def run(scenario, out, seed, epochs, sets, dump_plans, dump_tuples, ephemeris, no_inr_check, backend, quiet):
    """Simulate SCENARIO and write metrics, summary and optional dumps."""
    scn = _apply_sets(_load(scenario), sets)
    s = scn.seed if seed is None else seed
    out = out or str(Path(scn["run.output_dir"]) / f"{scn.name}-s{s}")
    _run(scn, s, out, epochs, dump_plans, dump_tuples, ephemeris, not no_inr_check, backend, quiet)


@main.command()
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print the comparison as JSON.")
def compare(run_dirs, as_json):
    """Compare runs against the first one."""
    from .sim import compare_runs, load_summary

    try:
        summaries = [load_summary(d) for d in run_dirs]
    except (OSError, ValueError) as exc:
        raise CliFailure("input", str(exc)) from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        table = compare_runs(summaries)
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    if as_json:
        click.echo(json.dumps(table, indent=2, sort_keys=True))
        return
    names = [f"{Path(d).name}" for d in run_dirs]
    click.echo(",".join(["metric", *names, *(f"rel_{n}" for n in names[1:])]))
    for m, row in table["metrics"].items():
        vals = ",".join(f"{v:.6g}" for v in row["values"])
        rel = ",".join(f"{r:+.4f}" for r in row["relative"][1:])
        click.echo(f"{m},{vals}" + (f",{rel}" if rel else ""))


@main.command()
@click.argument("scenario")
def validate(scenario):
    """Check a scenario file and print its digest."""
    scn = _load(scenario)
    click.echo(f"ok name={scn.name} digest={scn.digest()}")


@main.command()
@click.argument("scenario")
@click.option("--param", required=True, help="Scenario key or alias (V, seed, load, d_max, T, epochs).")
@click.option("--values", required=True, help="Comma-separated values.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Parent directory for the run directories.")
@_with_run_options
def sweep(scenario, param, values, out, seed, epochs, sets, dump_plans, dump_tuples, ephemeris,
          no_inr_check, backend, quiet):
    """Run SCENARIO once per value of one parameter."""
    base = _apply_sets(_load(scenario), sets)
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise CliFailure("usage", "--values is empty", code=EXIT_CONFIG)
    parent = Path(out or Path(base["run.output_dir"]) / f"{base.name}-sweep-{param}")
    leaf = param.split(".")[-1]
    for v in vals:
        try:
            scn = base.override(param, coerce_value(param, v))
        except ScenarioError as exc:
            raise CliFailure("config", str(exc).split(": ", 1)[-1], exc.key, exc.line, EXIT_CONFIG) from None
        s = scn.seed if seed is None else seed
        _run(scn, s, str(parent / f"{leaf}={v}"), epochs, dump_plans, dump_tuples, ephemeris,
             not no_inr_check, backend, quiet)


@main.command()
@click.argument("fixture", type=click.Path(exists=True, dir_okay=False))
def oracle(fixture):
    """Solve a small fixture exactly and print the result as JSON."""
    from .oracles import run_fixture

    try:
        res = run_fixture(fixture)
    except (KeyError, ValueError, TypeError) as exc:
        raise CliFailure("fixture", str(exc)) from None
    click.echo(json.dumps(res, sort_keys=True))


if __name__ == "__main__":
    sys.exit(main())
