"""Command-line interface: run, batch, certify, report.

Exit codes follow the verifier mapping: 0 all requested checks hold,
1 some check violated, 2 some check inconclusive at the horizon,
3 scenario/schema error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import verifier
from .engine import (
    ScenarioError,
    batch as run_batch,
    derived_scenarios,
    run,
    trace_csv,
    trace_json,
)
from .graphs import CT_IN_CONNECTED, GraphError
from .protocols import ProtocolError
from .report import detection_histogram, render_trace_report
from .rng import derive_seed
from .scenario import declared_class, load_scenario

EXIT_SCHEMA_ERROR = 3


def _load(path: str, seed, horizon, ell, freeze):
    try:
        doc = json.loads(Path(path).read_text())
        if seed is not None:
            doc["seed"] = seed
        if horizon is not None:
            doc["horizon"] = horizon
        if ell is not None:
            doc.setdefault("algorithm", {})["ell"] = ell
        if freeze:
            doc["terminate_on_detect"] = True
        return load_scenario(doc)
    except (ScenarioError, ProtocolError, GraphError, json.JSONDecodeError) as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(EXIT_SCHEMA_ERROR)


def _check_kwargs(loaded, full_sweep: bool):
    kwargs = {}
    if full_sweep:
        kwargs["lemma_cap"] = loaded.scenario.horizon
    wants_l4 = any(c in ("lemmas", "lemma:L4") for c in loaded.checks)
    if wants_l4 and loaded.scenario.params.algorithm == "A3":
        try:
            decl = declared_class(loaded)
        except ScenarioError:
            decl = None
        if decl is not None and decl["kind"] == CT_IN_CONNECTED:
            from .engine import resolve_source
            from .graphs import certify_window

            cert = certify_window(
                resolve_source(loaded.scenario),
                decl["kind"],
                loaded.scenario.horizon,
                T=decl["T"],
                c=decl.get("c"),
            )
            kwargs["l4_certified"] = bool(cert)
    return kwargs


@click.group()
def main() -> None:
    """Simulate and verify synchronization protocols on dynamic graphs."""


@main.command("run")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the scenario master seed.")
@click.option("--horizon", type=int, default=None, help="Override the horizon.")
@click.option("--checks", default=None, help="Comma-separated check names (overrides the file).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--ell", type=int, default=None, help="Override the A4 vector length.")
@click.option("--freeze-on-detect", is_flag=True, help="Freeze a node's state after it detects.")
@click.option("--full-lemma-sweep", is_flag=True, help="Lemma intervals up to the full horizon.")
def cmd_run(scenario_path, seed, horizon, checks, out_dir, ell, freeze_on_detect, full_lemma_sweep):
    """Run one scenario, write trace + summary, verify the requested checks."""
    loaded = _load(scenario_path, seed, horizon, ell, freeze_on_detect)
    if checks is not None:
        names = tuple(c.strip() for c in checks.split(",") if c.strip())
        bad = [c for c in names if c not in verifier.CHECK_NAMES]
        if bad:
            click.echo(f"scenario error: unknown check {bad[0]!r}", err=True)
            sys.exit(EXIT_SCHEMA_ERROR)
        loaded.checks = names
    trace = run(loaded.scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / loaded.trace_path).write_text(trace_json(trace))
    (out / loaded.summary_path).write_text(trace_csv(trace))
    verdicts = verifier.run_checks(trace, loaded.checks, **_check_kwargs(loaded, full_lemma_sweep))
    for name, v in verdicts.items():
        extra = ""
        if v.witness:
            extra = f"  witness={v.witness}"
        elif v.measured:
            extra = f"  {v.measured}"
        click.echo(f"{name}: {v.status}{extra}")
    click.echo(f"trace: {out / loaded.trace_path}")
    click.echo(f"summary: {out / loaded.summary_path}")
    sys.exit(verifier.exit_code(verdicts.values()))


BATCH_HEADER = (
    "seed,n,s_max,t_synch,common_detection,simultaneous,max_msg_bytes,failed,error,verdicts"
)


def summary_row(s) -> str:
    verdicts = ";".join(f"{k}={v.status}" for k, v in sorted(s.verdicts.items()))
    fields = [
        str(s.seed),
        str(s.n),
        str(s.s_max),
        "" if s.t_synch is None else str(s.t_synch),
        "" if s.common_detection is None else str(s.common_detection),
        "" if s.simultaneous is None else str(int(s.simultaneous)),
        str(s.max_msg_bytes),
        str(int(not s.ok)),
        s.error or "",
        verdicts,
    ]
    return ",".join(fields)


@main.command("batch")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seeds", "k", type=int, required=True, help="Number of derived-seed runs.")
@click.option("--parallel", type=int, default=1, show_default=True)
@click.option("--threshold", type=float, default=None, help="Max failure fraction for exit 0.")
@click.option("--checks", default=None, help="Comma-separated check names (overrides the file).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--ell", type=int, default=None)
@click.option("--freeze-on-detect", is_flag=True)
@click.option("--full-lemma-sweep", is_flag=True)
def cmd_batch(scenario_path, k, parallel, threshold, checks, out_dir, ell, freeze_on_detect, full_lemma_sweep):
    """Run the scenario under k derived seeds and aggregate the verdicts."""
    loaded = _load(scenario_path, None, None, ell, freeze_on_detect)
    if checks is not None:
        loaded.checks = tuple(c.strip() for c in checks.split(",") if c.strip())
    if threshold is None:
        threshold = loaded.threshold
    base = loaded.scenario.master_seed
    seeds = [derive_seed(base, "batch", i) % (1 << 63) for i in range(k)]
    scenarios = derived_scenarios(loaded.scenario, seeds)
    summaries = run_batch(
        scenarios, loaded.checks, parallel=parallel, **_check_kwargs(loaded, full_lemma_sweep)
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [BATCH_HEADER]
    lines.extend(summary_row(s) for s in summaries)
    failures = sum(1 for s in summaries if not s.ok)
    fraction = failures / len(summaries) if summaries else 0.0
    lines.append(f"# failure_fraction,{fraction!r},threshold,{threshold!r}")
    aggregate_path = out / "batch.csv"
    aggregate_path.write_text("\n".join(lines) + "\n")
    detection_histogram(summaries, out / "batch_detections.png")
    click.echo(f"{len(summaries)} runs, {failures} failed (fraction {fraction:.4f})")
    click.echo(f"aggregate: {aggregate_path}")
    sys.exit(0 if fraction <= threshold else 1)


@main.command("certify")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--horizon", type=int, default=None)
def cmd_certify(scenario_path, seed, horizon):
    """Certify the scenario's declared connectivity class over its horizon."""
    loaded = _load(scenario_path, seed, horizon, None, False)
    from .engine import resolve_source
    from .graphs import certify_window

    try:
        decl = declared_class(loaded)
        cert = certify_window(
            resolve_source(loaded.scenario),
            decl["kind"],
            loaded.scenario.horizon,
            T=decl["T"],
            c=decl.get("c"),
        )
    except (ScenarioError, GraphError) as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(EXIT_SCHEMA_ERROR)
    label = decl["kind"] + (f" c={decl.get('c')}" if decl.get("c") else "") + f" T={decl['T']}"
    if cert.ok:
        click.echo(
            f"certified {label} over horizon {cert.horizon} ({cert.windows_checked} windows)"
        )
        sys.exit(0)
    click.echo(f"NOT certified {label}: first failing window starts at round {cert.first_failure}")
    sys.exit(1)


@main.command("report")
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--horizon", type=int, default=None)
@click.option("--out-dir", type=click.Path(file_okay=False), default="report", show_default=True)
def cmd_report(scenario_path, seed, horizon, out_dir):
    """Run one scenario and render figures next to the per-round CSV."""
    loaded = _load(scenario_path, seed, horizon, None, False)
    trace = run(loaded.scenario)
    paths = render_trace_report(trace, Path(out_dir))
    for p in paths:
        click.echo(str(p))
    sys.exit(0)


if __name__ == "__main__":
    main()
