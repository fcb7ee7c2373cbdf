"""Command-line harness for load-shed fairness studies."""

from __future__ import annotations

import math
import sys
from pathlib import Path

import click

from .caseio import CaseFormatError, parse_case_file, read_weights
from .fairness import eps_max as compute_eps_max
from .scenario import (
    apply_damage,
    enumerate_damage,
    scenario_count,
    scenario_from_ordinal,
)
from .study import StudyConfig, run_study, solve_scenario, variant_name

CASE_ERROR_EXIT = 3


def _parse_p_list(text: str) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        out.append(math.inf if tok in ("inf", "infinity") else int(tok))
    if not out:
        raise click.BadParameter("empty p list")
    return tuple(out)


def _parse_eps_list(text: str) -> tuple:
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(t) for t in text.split(":"))
        except ValueError:
            raise click.BadParameter(f"bad eps range {text!r}") from None
        if step <= 0:
            raise click.BadParameter("eps step must be positive")
        out = []
        v = start
        while v <= stop + 1e-12:
            out.append(round(v, 10))
            v += step
        return tuple(out)
    return tuple(float(t) for t in text.split(",") if t.strip())


def _load_case(path: Path):
    try:
        return parse_case_file(path)
    except CaseFormatError as exc:
        click.echo(f"case error: {exc}", err=True)
        sys.exit(CASE_ERROR_EXIT)


@click.group()
def main():
    """Minimum load shedding with fairness objectives and constraints."""


@main.command(name="run")
@click.option("--case", "case_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--weights", "weights_path", type=click.Path(exists=True, path_type=Path))
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--p", "p_text", default="1,2,3,5,10,inf", show_default=True)
@click.option("--eps", "eps_text", default="0:1:0.1", show_default=True)
@click.option("--weighted-eps", "weps_text", default="0,0.2,0.4,0.6,0.8", show_default=True)
@click.option("--sample", type=int, default=None, help="Sample N scenarios instead of enumerating.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=0, help="Worker processes (0 = all cores).")
@click.option("--threshold", type=float, default=1e-6, show_default=True,
              help="Qualifying shed threshold, per-unit.")
@click.option("--out", "output_dir", required=True, type=click.Path(path_type=Path))
def run_cmd(case_path, weights_path, k, p_text, eps_text, weps_text, sample, seed,
            workers, threshold, output_dir):
    """Run the full scenario sweep and write CSV artifacts."""
    _load_case(case_path)  # surface case errors with exit code 3 up front
    try:
        config = StudyConfig(
            case_path=case_path,
            output_dir=output_dir,
            weights_path=weights_path,
            k_damaged=k,
            p_list=_parse_p_list(p_text),
            eps_list=_parse_eps_list(eps_text),
            weighted_eps_list=_parse_eps_list(weps_text),
            shed_threshold=threshold,
            sample=(sample, seed) if sample is not None else None,
            workers=workers,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    out = run_study(config)
    click.echo(f"study artifacts written to {out}")


@main.command()
@click.option("--case", "case_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Also write the scenario stream CSV here.")
def census(case_path, k, out_path):
    """Count damage scenarios; optionally dump the enumeration stream."""
    network = _load_case(case_path)
    try:
        total = scenario_count(network, k)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    click.echo(f"lines={len(network.lines)} k={k} scenarios={total}")
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write("ordinal," + ",".join(f"line_id_{i+1}" for i in range(k)) + "\n")
            for scn in enumerate_damage(network, k):
                fh.write(",".join(str(v) for v in (scn.ordinal, *scn.line_ids)) + "\n")
        click.echo(f"stream written to {out_path}")


@main.command()
@click.option("--case", "case_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--weights", "weights_path", type=click.Path(exists=True, path_type=Path))
@click.option("--scenario", "ordinal", required=True, type=int)
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--tol", default=1e-3, show_default=True, type=float)
def epsmax(case_path, weights_path, ordinal, k, tol):
    """Bisection for the largest feasible fairness level of one scenario."""
    network = _load_case(case_path)
    weights = read_weights(weights_path, network) if weights_path else None
    try:
        scn = scenario_from_ordinal(network, k, ordinal)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    dnet = apply_damage(network, scn)
    value = compute_eps_max(dnet, weights, tol=tol)
    click.echo(f"scenario {ordinal} lines {scn.line_ids}: eps_max = {value:.6g}")


@main.command(name="solve-one")
@click.option("--case", "case_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--weights", "weights_path", type=click.Path(exists=True, path_type=Path))
@click.option("--scenario", "ordinal", required=True, type=int)
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--variant", default="baseline", show_default=True,
              help="baseline | weighted | pnorm_<p> | pnorm_inf | eps_<e> | weighted_eps_<e>")
def solve_one(case_path, weights_path, ordinal, k, variant):
    """Solve a single scenario/variant and print the shed vector."""
    network = _load_case(case_path)
    weights = read_weights(weights_path, network) if weights_path else None
    try:
        scn = scenario_from_ordinal(network, k, ordinal)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None

    p_list: tuple = ()
    eps_list: tuple = ()
    weighted_eps_list: tuple = ()
    if variant in ("baseline", "weighted"):
        pass
    elif variant.startswith("pnorm_"):
        tok = variant[6:]
        p_list = (math.inf,) if tok == "inf" else (int(tok),)
    elif variant.startswith("weighted_eps_"):
        weighted_eps_list = (float(variant[13:]),)
    elif variant.startswith("eps_"):
        eps_list = (float(variant[4:]),)
    else:
        raise click.UsageError(f"unknown variant {variant!r}")
    if variant.startswith("weighted") and weights is None:
        raise click.UsageError("weighted variants need --weights")

    config = StudyConfig(
        case_path=case_path,
        output_dir=Path("."),
        k_damaged=k,
        p_list=p_list or (1,),
        eps_list=eps_list or ((0.0,) if not variant.startswith("eps") else eps_list),
        weighted_eps_list=weighted_eps_list,
    )
    rows, _ = solve_scenario(network, scn, config, weights)
    wanted = {variant, "baseline"}
    for row in rows:
        if row.variant not in wanted:
            continue
        click.echo(f"scenario {ordinal} {row.variant}: status={row.status}")
        if row.status == "optimal":
            click.echo(f"  total_shed_pu={row.total_shed!r} gini={row.gini:.6f} "
                       f"jain={row.jain:.6f} pof={row.pof if row.pof is not None else 'n/a'}")
            sheds = " ".join(f"{v:.6f}" for v in row.shed)
            click.echo(f"  shed_pu=[{sheds}]")


if __name__ == "__main__":
    main()
