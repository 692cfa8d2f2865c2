"""Command line entry point: ``bipcp <command> [options]``.

Exit codes: 0 success, 1 usage or input error, 2 verification failure.
"""

from __future__ import annotations

import json
import math
import sys

import click
import numpy as np

from . import combinatorics as comb
from . import contact, harness, hypergraph, phase
from .errors import BipcpError, InvalidInput

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class VerificationFailed(Exception):
    pass


def _load_config(ctx: click.Context, _param, path):
    """Key-value config file; values become defaults so flags still win."""
    if path:
        with open(path) as fh:
            conf = harness.parse_config_file(fh.read())
        names = {}
        for p in ctx.command.params:
            for o in getattr(p, "opts", []):
                names[o.lstrip("-").replace("-", "_")] = p.name
        unknown = [k for k in conf if k not in names]
        if unknown:
            raise click.BadParameter(f"unknown config keys: {', '.join(unknown)}")
        mapped = {names[k]: v for k, v in conf.items()}
        ctx.default_map = {**(ctx.default_map or {}), **mapped}
    return path


config_option = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), callback=_load_config,
    is_eager=True, expose_value=False, help="key = value file; flags override it.",
)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return harness.parse_float_list(text)
    except ValueError as e:
        raise click.BadParameter(f"not a number list: {text!r}") from e


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
def main():
    """Two-type contact process on a random connection hypergraph."""


# ---------------------------------------------------------------------------


@main.command("phase")
@config_option
@click.option("--gamma1", type=float, help="Single point: gamma1.")
@click.option("--gamma2", type=float, help="Single point: gamma2.")
@click.option("--a", "a", type=float, default=1.0, show_default=True)
@click.option("--gamma1-range", default="0.01,0.99", show_default=True)
@click.option("--gamma2-range", default="0.01,0.99", show_default=True)
@click.option("--a-range", default=None, help="lo,hi; defaults to --a.")
@click.option("--resolution", default="100,100,1", show_default=True, help="n1,n2,na")
@click.option("--diagonal", is_flag=True, help="gamma1 = gamma2 slice against a.")
@click.option("--format", "fmt", default="csv", show_default=True, help="csv, svg or json (single point).")
@click.option("--out", type=click.Path(dir_okay=False))
def phase_cmd(gamma1, gamma2, a, gamma1_range, gamma2_range, a_range, resolution, diagonal, fmt, out):
    """Classify one point or emit a phase diagram."""
    if gamma1 is not None or gamma2 is not None:
        if gamma1 is None or gamma2 is None:
            raise click.UsageError("a single point needs both --gamma1 and --gamma2")
        c = phase.classify(gamma1, gamma2, a)
        rec = {
            "gamma1": gamma1, "gamma2": gamma2, "a": a, "region": c.region,
            "target_region": c.target_region, "a_star": c.a_star_value,
            "strategy": c.dominant_strategy, "mu_label": c.mu_label, "nu_label": c.nu_label,
            "tie": c.tie, "thresholds": c.thresholds,
        }
        _emit(harness.write_json(rec, None), out)
        return
    res = tuple(int(x) for x in _floats(resolution))
    if len(res) != 3:
        raise click.BadParameter("resolution needs three integers n1,n2,na")
    spec = harness.GridSpec(
        _floats(gamma1_range), _floats(gamma2_range),
        _floats(a_range) if a_range else (a, a), res, diagonal, centers=(fmt == "svg"),
    )
    text = harness.emit_phase_diagram(spec, fmt)
    _emit(text, out)


# ---------------------------------------------------------------------------


@main.command("simulate")
@config_option
@click.option("--gamma1", type=float, required=True)
@click.option("--gamma2", type=float, required=True)
@click.option("--a", "a", type=float, default=1.0, show_default=True)
@click.option("--lambda", "lambdas", required=True, help="Comma-separated list of infection rates.")
@click.option("--L", "L", type=float, default=5000.0, show_default=True, help="Window half-width.")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--t-max", type=float, default=1000.0, show_default=True)
@click.option("--proxy", type=click.Choice(contact.PROXIES), default="alive-at-horizon", show_default=True)
@click.option("--max-events", type=int, default=10_000_000, show_default=True)
@click.option("--escape-size", type=int, default=None, help="Stop a trial once this many are infected.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=None, envvar="BIPCP_WORKERS")
@click.option("--out", type=click.Path(dir_okay=False), help="Aggregate rows as JSON lines.")
@click.option("--trial-log", type=click.Path(dir_okay=False), help="Per-trial JSON lines.")
@click.option("--fit", is_flag=True, help="Also fit log theta against log lambda.")
@click.option("--format", "fmt", default="jsonl", show_default=True, help="jsonl or json.")
def simulate_cmd(gamma1, gamma2, a, lambdas, L, trials, t_max, proxy, max_events, escape_size, seed, workers, out, trial_log, fit, fmt):
    """Estimate the survival probability over a list of lambdas."""
    if fmt not in ("jsonl", "json"):
        raise click.BadParameter(f"unsupported format {fmt!r}")
    sim = contact.SimConfig(t_max=t_max, max_events=max_events, survival_proxy=proxy, escape_size=escape_size)
    try:
        cfg = harness.ExperimentConfig(gamma1, gamma2, a, _floats(lambdas), L, trials, sim, seed, None, workers)
    except InvalidInput as e:
        raise click.BadParameter(str(e)) from e
    rows = []
    log = open(trial_log, "w") if trial_log else None
    try:
        for lam in cfg.lambdas:
            est = contact.estimate_theta(
                cfg.params(lam), hypergraph.Window(L), hypergraph.RootSpec.uniform(1), trials,
                harness.sim_config_for(cfg, lam), seed, workers, keep_outcomes=bool(log),
            )
            row = harness.SweepRow(lam, est.theta_hat, est.ci_lo, est.ci_hi, est.trials, est.proxy, est.diagnostics)
            rows.append(row)
            if log:
                for i, o in enumerate(est.outcomes):
                    log.write(json.dumps({"lambda": lam, **o.as_json(i)}) + "\n")
            click.echo(json.dumps(row.diagnostics_json()), err=True)
    finally:
        if log:
            log.close()
    if fmt == "jsonl":
        text = "".join(json.dumps(r.as_json()) + "\n" for r in rows)
    else:
        text = json.dumps([r.as_json() for r in rows], indent=2) + "\n"
    _emit(text, out)
    if fit:
        try:
            f = harness.fit_slope(rows, target=phase.a_star(gamma1, gamma2, a))
            click.echo(json.dumps({"slope": f.slope, "stderr": f.stderr, "a_star": f.target, "points": f.n_points,
                                   "excluded_zero": f.excluded_zero}), err=True)
        except BipcpError as e:
            click.echo(f"fit skipped: {e}", err=True)


# ---------------------------------------------------------------------------


@main.command("star")
@config_option
@click.option("--n", "n", type=int, required=True, help="Number of leaves.")
@click.option("--lambda1", type=float, required=True)
@click.option("--lambda2", type=float, default=None, help="Defaults to --lambda1.")
@click.option("--initial", default="centre", show_default=True, help="'centre' or a leaf count m.")
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--t-max", type=float, default=1.0, show_default=True)
@click.option("--threshold", type=float, default=None, help="Infected count to reach; default lambda1 n/(8e).")
@click.option("--method", type=click.Choice(["events", "leap"]), default="events", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def star_cmd(n, lambda1, lambda2, initial, trials, t_max, threshold, method, seed, out):
    """Run the star engine and report how often the infection grows."""
    rates = contact.Rates(lambda1, lambda1 if lambda2 is None else lambda2)
    init = "centre" if initial == "centre" else int(initial)
    thr = lambda1 * n / (8 * math.e) if threshold is None else threshold
    cfg = contact.SimConfig(t_max=t_max, max_events=10**12)
    peaks = []
    alive = 0
    for i in range(trials):
        o = contact.run_star(n, rates, init, cfg, contact.trial_rng(seed, i), method=method)
        peaks.append(o.peak_infected)
        alive += o.alive_at_end
    hit = sum(p >= thr for p in peaks)
    p = hit / trials
    rec = {
        "n": n, "lambda1": rates.lambda1, "lambda2": rates.lambda2, "initial": initial, "trials": trials,
        "t_max": t_max, "threshold": thr, "reached": hit, "frequency": p,
        "se": math.sqrt(p * (1 - p) / trials), "alive_fraction": alive / trials,
    }
    _emit(harness.write_json(rec, None), out)


# ---------------------------------------------------------------------------


@main.command("paths")
@config_option
@click.option("--length", "ell", type=int, required=True)
@click.option("--k", "k", type=int, default=None)
@click.option("--trees", is_flag=True, help="Print the discovery tree parent array after each path.")
@click.option("--count", is_flag=True, help="Print only counts against the bound.")
@click.option("--out", type=click.Path(dir_okay=False))
def paths_cmd(ell, k, trees, count, out):
    """Enumerate combinatorial paths of a given length."""
    if count:
        ks = [k] if k else range(1, ell + 2)
        rows = []
        for kk in ks:
            c = len(comb.enumerate_paths(ell, kk))
            rows.append({"length": ell, "k": kk, "count": c, "bound": comb.count_bound(ell, kk)})
        _emit("".join(json.dumps(r) + "\n" for r in rows), out)
        return
    lines = []
    for p in comb.iter_paths(ell, k):
        lines.append(p.dump() + ("\t" + comb.discovery_tree(p, m_star=None).dump() if trees else ""))
    _emit("".join(x + "\n" for x in lines), out)


# ---------------------------------------------------------------------------


@main.command("verify")
@config_option
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--quick", is_flag=True, help="Smaller sample sizes.")
@click.option("--out", type=click.Path(dir_okay=False))
def verify_cmd(seed, quick, out):
    """Run every cross-check; exit status 2 if any fails."""
    sizes = harness.VerifySizes.quick() if quick else harness.VerifySizes()
    report = harness.verify_all(seed, sizes)
    _emit(harness.write_json(report, None), out)
    if not report["passed"]:
        raise VerificationFailed(", ".join(c["name"] for c in report["checks"] if not c["passed"]))


# ---------------------------------------------------------------------------


@main.command("percolation")
@config_option
@click.option("--gamma1", type=float, required=True)
@click.option("--gamma2", type=float, required=True)
@click.option("--L", "Ls", default="1000,10000", show_default=True, help="Comma-separated window half-widths.")
@click.option("--seeds", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
def percolation_cmd(gamma1, gamma2, Ls, seeds, seed, out):
    """Largest-component fraction against window size (no root)."""
    params = phase.ModelParams(gamma1, gamma2, allow_subcritical=True)
    rows = [harness.percolation_row(params, L, seeds, seed) for L in _floats(Ls)]
    _emit("".join(json.dumps(r) + "\n" for r in rows), out)


# ---------------------------------------------------------------------------


def run(argv=None) -> int:
    try:
        main.main(args=argv, prog_name="bipcp", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except VerificationFailed as e:
        click.echo(f"verification failed: {e}", err=True)
        return EXIT_VERIFY
    except (BipcpError, ValueError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_USAGE
    return EXIT_OK


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
