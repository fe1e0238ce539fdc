"""Command-line front end: run experiments, write JSON + CSV reports.

Every command resolves an entry from the registry, runs the requested
check at the entry's recommended settings (overridable by flags or a JSON
config), writes a JSON report plus a CSV convergence table, and exits

    0  the verdict matches the entry's flag (or there is nothing to match)
    2  definitive mismatch
    3  numerically inconclusive

Reports are reproducible from config + seed; --deterministic zeroes wall
times so reruns are byte-identical.  GAUGESET_SEED overrides any seed.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import decomposition as dec
from . import integrators as it

_FLAG_KEY = {
    "henstock": "henstock",
    "mcshane": "mcshane",
    "birkhoff": "birkhoff",
    "vh": "vH",
    "vms": "vMS",
    "hkp": "hkp",
}

_YES_VERDICT = {
    "henstock": "converged",
    "mcshane": "converged",
    "birkhoff": "converged",
    "vh": "converged",
    "vms": "converged",
    "hkp": "hkp-consistent",
}

_NO_VERDICT = {
    "henstock": "diverged",
    "mcshane": "diverged",
    "birkhoff": "diverged",
    "vh": "diverged",
    "vms": "diverged",
    "hkp": "not-hkp",
}


def _resolve_seed(seed):
    env = os.environ.get("GAUGESET_SEED")
    if env is not None:
        return int(env)
    return seed


def _load_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise click.ClickException(f"cannot read config: {e}")
    if not isinstance(cfg, dict) or cfg.get("schema") != 1:
        raise click.ClickException('config must be a JSON object with "schema": 1')
    allowed = {"schema", "command", "entry", "params", "settings", "output"}
    unknown = set(cfg) - allowed
    if unknown:
        raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
    settings = cfg.get("settings", {})
    if not isinstance(settings, dict):
        raise click.ClickException('"settings" must be an object')
    return cfg


def _write_reports(out_dir, stem, json_dict, csv_rows, deterministic):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{stem}.json"
    payload = dict(json_dict)
    payload["schema"] = 1
    payload["deterministic"] = bool(deterministic)
    json_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    csv_path = out / f"{stem}.csv"
    csv_path.write_text("\n".join(csv_rows) + "\n")
    return json_path, csv_path


def _schedule_for(entry, method, levels, config_settings):
    rec = entry.recommended.get(method, {})
    sched_id = config_settings.get("schedule", rec.get("schedule", "uniform"))
    L = levels or config_settings.get("levels")
    if method == "birkhoff":
        parts = corpus_mod.named_parts(rec.get("parts", "dyadic-14"))
        return parts[:L] if L else parts
    if L:
        return corpus_mod.named_schedule(sched_id, levels=int(L))
    return corpus_mod.named_schedule(sched_id)


def _tol_for(entry, method, tol, config_settings):
    if tol is not None:
        return tol
    if "tol" in config_settings:
        return float(config_settings["tol"])
    rec = entry.recommended.get(method, {})
    return rec.get("tol", it.DEFAULT_TOL_D1 if entry.d == 1 else it.DEFAULT_TOL_D2)


@click.group()
def main():
    """Gauge integration of convex-set-valued maps on direction grids."""


@main.command()
@click.argument("entry")
@click.option("--method", type=click.Choice(sorted(_FLAG_KEY)), default="henstock")
@click.option("--tol", type=float, default=None, help="Override the entry tolerance.")
@click.option("--levels", type=int, default=None, help="Override schedule length.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="gaugeset-runs", show_default=True)
@click.option("--config", "config_path", default=None, help="RunConfig JSON (schema 1).")
@click.option("--deterministic", is_flag=True, help="Zero wall times for byte-identical reruns.")
def integrate(entry, method, tol, levels, seed, out_dir, config_path, deterministic):
    """Integrate ENTRY with one notion and match the verdict to its flag."""
    cfg = _load_config(config_path) if config_path else {}
    settings = cfg.get("settings", {})
    entry = cfg.get("entry", entry)
    method = settings.get("method", method)
    seed = _resolve_seed(settings.get("seed", seed))
    out_dir = cfg.get("output", {}).get("dir", out_dir)
    try:
        spec = corpus_mod.corpus_get(entry)
    except ValueError as e:
        raise click.ClickException(str(e))
    tol = _tol_for(spec, method, tol, settings)
    sched = _schedule_for(spec, method, levels, settings)

    if method == "henstock":
        report = it.henstock_integrate(spec, sched, tol, seed=seed)
    elif method == "mcshane":
        mode = settings.get("mode", spec.recommended.get("mcshane", {}).get("mode", "plain"))
        report = it.mcshane_integrate(spec, sched, tol, seed=seed, mode=mode)
    elif method == "birkhoff":
        report = it.birkhoff_integrate(spec, sched, tol, seed=seed)
    elif method in ("vh", "vms"):
        phi = (spec.exact_primitive() if spec.exact_primitive
               else it.build_primitive(spec, sched.levels[-1]))
        report = it.vh_check(spec, phi, sched,
                             mode="perron" if method == "vh" else "free",
                             tol=tol, seed=seed)
        report.flags["primitive"] = "exact" if spec.exact_primitive else "built"
    else:
        report = it.directional_profile(spec, sched, tol, seed=seed)

    stem = f"integrate-{spec.name}-{method}-s{seed}"
    jp, cp = _write_reports(out_dir, stem, report.to_json_dict(deterministic),
                            report.csv_rows(deterministic), deterministic)
    click.echo(f"verdict: {report.verdict}")
    click.echo(f"report: {jp}")
    click.echo(f"table: {cp}")

    flag = spec.flag(_FLAG_KEY[method])
    if report.verdict == "inconclusive":
        sys.exit(3)
    if flag == "unknown":
        sys.exit(0)
    want = _YES_VERDICT[method] if flag == "yes" else _NO_VERDICT[method]
    sys.exit(0 if report.verdict == want else 2)


def _parse_selection(token, spec):
    if token == "steiner":
        return dec.steiner_selection(spec)
    if token.startswith("argmax:"):
        u = token.split(":", 1)[1]
        if spec.d == 1:
            return dec.argmax_selection(spec, int(u))
        return dec.argmax_selection(spec, int(u.lstrip("u")))
    raise click.ClickException(
        f"unknown selection {token!r}; use steiner or argmax:<direction>")


@main.command()
@click.argument("entry")
@click.option("--selection", default="steiner", show_default=True,
              help="steiner or argmax:<direction> (+1/-1 in d=1, index in d=2).")
@click.option("--theorem", type=click.Choice(["t33", "t42", "t55"]), default="t33")
@click.option("--tol", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="gaugeset-runs", show_default=True)
@click.option("--deterministic", is_flag=True)
def decompose(entry, selection, theorem, tol, seed, out_dir, deterministic):
    """Verify a decomposition theorem on ENTRY with a constructed selection."""
    try:
        spec = corpus_mod.corpus_get(entry)
    except ValueError as e:
        raise click.ClickException(str(e))
    seed = _resolve_seed(seed)
    if tol is None:
        tol = spec.recommended.get("henstock", {}).get("tol", 1e-3)
    report = dec.verify_decomposition(spec, _parse_selection(selection, spec),
                                      theorem, tol, seed=seed)
    gamma_rep = report.reports.get("gamma_henstock")
    stem = f"decompose-{spec.name}-{theorem}-s{seed}"
    jp, cp = _write_reports(out_dir, stem, report.to_json_dict(deterministic),
                            gamma_rep.csv_rows(deterministic), deterministic)
    click.echo(f"verdict: {report.verdict}"
               + (f" (expected {report.expected})" if report.expected else ""))
    click.echo(f"gap: {report.gap:.3e}")
    click.echo(f"report: {jp}")
    click.echo(f"table: {cp}")
    if report.expected is None or report.verdict == report.expected:
        sys.exit(0)
    sys.exit(2 if report.definitive else 3)


def _parse_set(token):
    comps = []
    for part in token.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = part.split(":", 1)
            comps.append((float(lo), float(hi)))
        else:
            comps.append(float(part))
    return comps


@main.command()
@click.argument("entry")
@click.option("--set", "set_token", required=True,
              help="Comma list of points and lo:hi intervals, e.g. '0' or '0.25:0.75'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--levels", type=int, default=None)
@click.option("--out", "out_dir", default="gaugeset-runs", show_default=True)
@click.option("--deterministic", is_flag=True)
def varmeasure(entry, set_token, seed, levels, out_dir, deterministic):
    """Estimate the variational measure of ENTRY's primitive on a set."""
    try:
        spec = corpus_mod.corpus_get(entry)
    except ValueError as e:
        raise click.ClickException(str(e))
    seed = _resolve_seed(seed)
    sched = corpus_mod.named_schedule("uniform", levels=levels or 12)
    phi = (spec.exact_primitive() if spec.exact_primitive
           else it.build_primitive(spec, sched.levels[-1]))
    E = _parse_set(set_token)
    result = it.variational_measure_estimate(phi, E, sched, seed=seed)
    result["entry"] = spec.name
    rows = ["level,residual,max_dir_residual,wall_ms"]
    rows += [f"{i + 1},{est!r},{est!r},0.000"
             for i, est in enumerate(result["estimates"])]
    stem = f"varmeasure-{spec.name}-s{seed}"
    jp, cp = _write_reports(out_dir, stem, result, rows, deterministic)
    click.echo(f"final: {result['final']:.6e} (approximate)")
    click.echo(f"report: {jp}")
    click.echo(f"table: {cp}")
    sys.exit(0)


@main.command("riemann-check")
@click.argument("entry")
@click.option("--set", "set_token", default="0:1", show_default=True)
@click.option("--delta", type=float, default=1e-3, show_default=True)
@click.option("--eps", type=float, default=0.05, show_default=True)
@click.option("--trials", type=int, default=12, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="gaugeset-runs", show_default=True)
@click.option("--deterministic", is_flag=True)
def riemann_check(entry, set_token, delta, eps, trials, seed, out_dir, deterministic):
    """Riemann-measurability oscillation probe of ENTRY's Steiner selection."""
    try:
        spec = corpus_mod.corpus_get(entry)
    except ValueError as e:
        raise click.ClickException(str(e))
    seed = _resolve_seed(seed)
    sel = dec.steiner_selection(spec)
    f = lambda ts: sel(ts)[:, 0]
    comps = [(c, c) if not isinstance(c, tuple) else c for c in _parse_set(set_token)]
    result = dec.riemann_measurability_probe(f, comps, delta, trials=trials,
                                             eps=eps, seed=seed)
    result["entry"] = spec.name
    result["selection_component"] = 0
    rows = ["level,residual,max_dir_residual,wall_ms",
            f"1,{result['plain_max']!r},{result['strong_max']!r},0.000"]
    stem = f"riemann-{spec.name}-s{seed}"
    jp, cp = _write_reports(out_dir, stem, result, rows, deterministic)
    click.echo(f"verdict: {result['verdict']} "
               f"(plain {result['plain_max']:.3e}, strong {result['strong_max']:.3e})")
    click.echo(f"report: {jp}")
    click.echo(f"table: {cp}")
    sys.exit(0)


@main.group()
def corpus():
    """Inspect the registry."""


@corpus.command("list")
def corpus_list():
    out = [corpus_mod.corpus_get(n).to_json_dict() for n in corpus_mod.corpus_names()]
    click.echo(json.dumps(out, sort_keys=True, indent=2))


@corpus.command("show")
@click.argument("name")
def corpus_show(name):
    try:
        spec = corpus_mod.corpus_get(name)
    except ValueError as e:
        raise click.ClickException(str(e))
    click.echo(json.dumps(spec.to_json_dict(), sort_keys=True, indent=2))


if __name__ == "__main__":
    main()
