"""Command-line front end: flat key=value configuration with [section]
headers, parameter sweeps on a bounded process pool with deterministic
ordered merging, line-delimited record output, and SVG/figure emission.

Commands: bands | lyapunov | gapflow | winding | hull | cantor-trend |
gap-filling | verify.  Exit codes: 0 success, 1 error, 2 verification
failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, hull, perturb, potentials, report, spectra
from .numerics import (
    INF,
    Arc,
    DomainError,
    Frequency,
    arc_path_between,
    continued_fraction,
    ext,
)

COMMANDS = (
    "bands", "lyapunov", "gapflow", "winding", "hull",
    "cantor-trend", "gap-filling", "verify",
)

KNOWN_KEYS = {
    "job": {"command", "seed", "workers", "worker_count"},
    "potential": {"kind", "scale", "lam", "lo", "hi", "wiggle", "value", "table"},
    "frequency": {"alpha", "quotients"},
    "arc": {"choice"},
    "grid": {
        "e_min", "e_max", "e_points", "theta_samples", "t_samples",
        "x_samples", "eps", "energies", "n_steps", "n_phases",
        "convergent_count",
    },
    "gapflow": {
        "gap_start", "gap_end", "t_start", "t_end", "via_infinity",
        "full_circle", "samples",
    },
    "hull": {"n_trunc"},
    "winding": {"samples"},
    "verify": {"suites", "fixtures"},
}


class ConfigError(ValueError):
    """Malformed or invalid configuration; the message carries the line."""


@dataclass
class JobConfig:
    command: str
    sections: dict = field(default_factory=dict)     # section -> {key: (text, line)}

    def has(self, section, key):
        return key in self.sections.get(section, {})

    def raw(self, section, key, default=None):
        entry = self.sections.get(section, {}).get(key)
        return entry[0] if entry else default

    def _parse(self, section, key, text, line, cast):
        try:
            return cast(text)
        except (ValueError, DomainError) as exc:
            raise ConfigError(f"line {line}: {section}.{key} = {text!r}: {exc}") from None

    def get(self, section, key, cast=str, default=None, required=False):
        entry = self.sections.get(section, {}).get(key)
        if entry is None:
            if required:
                raise ConfigError(f"missing required key {section}.{key}")
            return default
        return self._parse(section, key, entry[0], entry[1], cast)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ext_value(text):
    t = text.strip().lower()
    if t in ("inf", "+inf", "-inf", "infinity"):
        return INF
    return ext(float(text))


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def parse_config(text):
    """Parse the documented flat key=value format into a validated
    JobConfig; diagnostics carry line numbers, unknown keys are rejected."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in KNOWN_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS[current]:
            raise ConfigError(f"line {lineno}: unknown key {current}.{key}")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {current}.{key}")
        sections[current][key] = (value, lineno)

    cfg = JobConfig(command="", sections=sections)
    command = cfg.get("job", "command", str, default=None)
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg.command = command or ""
    workers = cfg.get("job", "workers", int, default=None)
    if workers is None:
        workers = cfg.get("job", "worker_count", int, default=None)
    if workers is not None and workers < 1:
        raise ConfigError("worker count must be >= 1")
    seed = cfg.get("job", "seed", int, default=None)
    if seed is not None and seed < 0:
        raise ConfigError("seed must be nonnegative")
    # eager validation of the frequency and potential when present
    if cfg.has("frequency", "alpha") or cfg.has("frequency", "quotients"):
        _alpha_from_config(cfg)
    if cfg.has("potential", "kind"):
        _potential_spec(cfg)
    return cfg


# ---------------------------------------------------------------------------
# Builders (specs stay picklable primitives for worker processes)
# ---------------------------------------------------------------------------

def _alpha_from_config(cfg):
    if cfg.has("frequency", "quotients"):
        qs = cfg.get("frequency", "quotients", _int_list)
        try:
            return Frequency.from_partial_quotients(qs)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    text = cfg.get("frequency", "alpha", str, required=True)
    try:
        if "/" in text:
            p, q = text.split("/", 1)
            return Frequency.rational(int(p), int(q))
        return Frequency.irrational(float(text))
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"frequency.alpha = {text!r}: {exc}") from None


def _alpha_spec(cfg):
    a = _alpha_from_config(cfg)
    if a.kind == "rational":
        return ("rational", a.p, a.q)
    if a.kind == "quotients":
        return ("quotients", a.quotients)
    return ("irrational", a.x)


def _alpha_build(spec):
    kind = spec[0]
    if kind == "rational":
        return Frequency.rational(spec[1], spec[2])
    if kind == "quotients":
        return Frequency.from_partial_quotients(spec[1])
    return Frequency.irrational(spec[1])


def _potential_spec(cfg):
    kind = cfg.get("potential", "kind", str, required=True)
    spec = {"kind": kind}
    for key, cast in (
        ("scale", float), ("lam", float), ("lo", float), ("hi", float),
        ("wiggle", float), ("value", float), ("table", str),
    ):
        if cfg.has("potential", key):
            spec[key] = cfg.get("potential", key, cast)
    try:
        _potential_build(spec)
    except DomainError as exc:
        raise ConfigError(f"potential: {exc}") from None
    return spec


def _potential_build(spec):
    kind = spec["kind"]
    if kind == "piecewise_table":
        return potentials.load_piecewise_table(spec["table"])
    params = {k: v for k, v in spec.items() if k != "kind"}
    return potentials.make_builtin(kind, **params)


def _glue_spec(cfg):
    return cfg.get("arc", "choice", str, default=potentials.THROUGH_INFINITY)


def _glue_build(pot, choice):
    """Arc path closing the discontinuity, or None for a potential that is
    already a continuous circle map."""
    if not pot.has_simple_discontinuity():
        return None
    return potentials.make_tilde(pot, choice).path


# ---------------------------------------------------------------------------
# Work items (module-level for pickling; dispatched by kind)
# ---------------------------------------------------------------------------

def _execute_item(payload):
    kind = payload[0]
    if kind == "bands":
        _, pot_spec, alpha_spec, x = payload
        spec = spectra.discriminant_bands(
            _potential_build(pot_spec), x, _alpha_build(alpha_spec)
        )
        return list(spec.intervals)
    if kind == "lyapunov":
        _, pot_spec, alpha_spec, E, n_steps, n_phases, seed = payload
        res = spectra.lyapunov(
            _potential_build(pot_spec), 0.0, _alpha_build(alpha_spec), E,
            n_steps=n_steps, n_phases=n_phases, seed=seed,
        )
        return (res.value, res.stderr, res.skipped_fraction, res.unreliable)
    if kind == "trend":
        _, pot_spec, p, q = payload
        spec = spectra.discriminant_bands(
            _potential_build(pot_spec), 0.0, Frequency.rational(p, q)
        )
        return list(spec.intervals)
    if kind == "winding":
        _, pot_spec, alpha_spec, choice, samples = payload
        pot = _potential_build(pot_spec)
        glue = _glue_build(pot, choice)
        w = analysis.det_winding(pot, glue, _alpha_build(alpha_spec), samples=samples)
        if glue is None:
            deg = potentials.degree(potentials.CircleMapTilde.from_continuous(pot))
        else:
            deg = potentials.degree(potentials.CircleMapTilde(base=pot, path=glue))
        return (w, deg)
    raise ValueError(f"unknown work item kind {kind!r}")


def _map_items(items, workers):
    if workers <= 1 or len(items) <= 1:
        return [_execute_item(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_item, items))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_bands(cfg, workers, seed):
    pot_spec = _potential_spec(cfg)
    alpha_spec = _alpha_spec(cfg)
    if alpha_spec[0] != "rational":
        raise ConfigError("bands requires a rational frequency p/q")
    n = cfg.get("grid", "theta_samples", int, default=10)
    phases = [(i + 0.5) / n for i in range(n)]
    items = [("bands", pot_spec, alpha_spec, x) for x in phases]
    results = _map_items(items, workers)
    records = []
    for i, (x, intervals) in enumerate(zip(phases, results)):
        for b, (left, right) in enumerate(intervals):
            records.append({
                "command": "bands", "theta_index": i, "phase": x,
                "band_index": b, "left": left, "right": right,
                "x": x, "y0": left, "y1": right,
            })
    return records, 0


def _cmd_lyapunov(cfg, workers, seed):
    pot_spec = _potential_spec(cfg)
    alpha_spec = _alpha_spec(cfg)
    if cfg.has("grid", "energies"):
        energies = cfg.get("grid", "energies", _float_list)
    else:
        e0 = cfg.get("grid", "e_min", float, default=-3.0)
        e1 = cfg.get("grid", "e_max", float, default=3.0)
        n = cfg.get("grid", "e_points", int, default=25)
        energies = list(np.linspace(e0, e1, n))
    n_steps = cfg.get("grid", "n_steps", int, default=10_000)
    n_phases = cfg.get("grid", "n_phases", int, default=32)
    items = [
        ("lyapunov", pot_spec, alpha_spec, E, n_steps, n_phases, seed)
        for E in energies
    ]
    results = _map_items(items, workers)
    records = []
    for E, (value, stderr, skipped, unreliable) in zip(energies, results):
        records.append({
            "command": "lyapunov", "E": E, "value": value, "stderr": stderr,
            "skipped_fraction": skipped, "unreliable": unreliable,
            "x": E, "y": value, "series": "lyapunov",
        })
    return records, 0


def _cmd_gapflow(cfg, workers, seed):
    pot = _potential_build(_potential_spec(cfg))
    alpha = _alpha_from_config(cfg)
    gap = (
        cfg.get("gapflow", "gap_start", _ext_value, required=True),
        cfg.get("gapflow", "gap_end", _ext_value, required=True),
    )
    samples = cfg.get("gapflow", "samples", int, default=33)
    if cfg.get("gapflow", "full_circle", _bool, default=False):
        t0 = cfg.get("gapflow", "t_start", _ext_value, required=True)
        t_path = Arc(t0, t0, full_circle=True)
    else:
        t_path = arc_path_between(
            cfg.get("gapflow", "t_start", _ext_value, required=True),
            cfg.get("gapflow", "t_end", _ext_value, required=True),
            cfg.get("gapflow", "via_infinity", _bool, default=True),
        )
    curve = perturb.trace_gap_flow(pot, 0.0, alpha, gap, t_path, n_samples=samples)
    records = []
    for t, lam in curve.samples:
        records.append({
            "command": "gapflow", "t": t, "lambda": lam,
            "x": t, "y": lam, "series": "flow",
        })
    records.append({
        "command": "gapflow", "summary": True,
        "t_minus": curve.t_window[0], "t_plus": curve.t_window[1],
        "n_samples": len(curve.samples),
    })
    return records, 0


def _cmd_winding(cfg, workers, seed):
    pot_spec = _potential_spec(cfg)
    alpha_spec = _alpha_spec(cfg)
    if alpha_spec[0] != "rational":
        raise ConfigError("winding requires a rational frequency p/q")
    samples = cfg.get("winding", "samples", int, default=None)
    choice = _glue_spec(cfg)
    (w, deg), = _map_items(
        [("winding", pot_spec, alpha_spec, choice, samples)], workers
    )
    q = alpha_spec[2]
    return [{
        "command": "winding", "q": q, "winding": w, "degree": deg,
        "product_identity": w == q * deg,
    }], 0


def _cmd_hull(cfg, workers, seed):
    alpha = _alpha_from_config(cfg)
    n_trunc = cfg.get("hull", "n_trunc", int, default=hull.N_TRUNC_DEFAULT)
    model = hull.HullModel(alpha, n_trunc=n_trunc)
    records = []
    for i, g in enumerate(model.gaps):
        records.append({
            "command": "hull", "labels": list(g.labels), "position": g.position,
            "left": g.left, "right": g.right, "width": g.width,
            "merged": g.merged, "x": i, "y0": g.left, "y1": g.right,
        })
    return records, 0


def _cmd_cantor_trend(cfg, workers, seed):
    pot_spec = _potential_spec(cfg)
    alpha = _alpha_from_config(cfg)
    K = cfg.get("grid", "convergent_count", int, default=8)
    e0 = cfg.get("grid", "e_min", float, default=-3.0)
    e1 = cfg.get("grid", "e_max", float, default=4.0)
    convs = [(p, q) for p, q in continued_fraction(alpha, K) if p > 0]
    items = [("trend", pot_spec, p, q) for p, q in convs]
    results = _map_items(items, workers)
    records = []
    prev = None
    for k, ((p, q), intervals) in enumerate(zip(convs, results)):
        spec = spectra.SpectrumSet.from_intervals(intervals).clip((e0, e1))
        stats = analysis.band_stats(spec, (e0, e1))
        dist = (
            analysis.hausdorff_distance(prev, spec) if prev is not None else None
        )
        prev = spec
        records.append({
            "command": "cantor-trend", "k": k, "p": p, "q": q,
            "band_count": stats.band_count,
            "total_measure": stats.total_measure,
            "max_band_length": stats.max_band_length,
            "min_gap_length": stats.min_gap_length,
            "hausdorff_prev": dist,
        })
        for b, (left, right) in enumerate(spec.intervals):
            records.append({
                "command": "cantor-trend", "k": k, "q": q, "band_index": b,
                "left": left, "right": right, "x": k, "y0": left, "y1": right,
            })
    return records, 0


def _cmd_gap_filling(cfg, workers, seed):
    pot = _potential_build(_potential_spec(cfg))
    alpha = _alpha_from_config(cfg)
    if not alpha.is_rational:
        raise ConfigError("gap-filling requires a rational frequency p/q")
    e0 = cfg.get("grid", "e_min", float, default=-4.0)
    e1 = cfg.get("grid", "e_max", float, default=5.0)
    n = cfg.get("grid", "e_points", int, default=181)
    eps = cfg.get("grid", "eps", float, default=0.05)
    glue = _glue_build(pot, _glue_spec(cfg))
    rep = analysis.gap_filling_check(pot, glue, alpha, np.linspace(e0, e1, n), eps)
    records = [{
        "command": "gap-filling", "covered_fraction": rep.covered_fraction,
        "hole_count": len(rep.holes), "eps": eps,
        "contains_infinity": rep.spectrum.contains_infinity,
    }]
    for a, b in rep.holes:
        records.append({"command": "gap-filling", "hole_left": a, "hole_right": b})
    for b, (left, right) in enumerate(rep.spectrum.intervals):
        records.append({
            "command": "gap-filling", "band_index": b, "left": left,
            "right": right, "x": 0.5 * (left + right), "y0": left, "y1": right,
        })
    return records, 0


def _cmd_verify(cfg, workers, seed):
    suites = cfg.get(
        "verify", "suites", lambda t: [s.strip() for s in t.split(",") if s.strip()],
        default=["norm_bound", "lemma_main", "flow", "lyapunov"],
    )
    n_fixtures = cfg.get("verify", "fixtures", int, default=20)
    records = []
    failed = 0

    def add(suite, case, passed, **detail):
        nonlocal failed
        if not passed:
            failed += 1
        records.append({"command": "verify", "suite": suite, "case": case,
                        "passed": bool(passed), **detail})

    rng = np.random.default_rng(seed)
    if "norm_bound" in suites:
        for i in range(n_fixtures):
            N = 30
            diag = rng.normal(0.0, 1.0, 2 * N + 1)
            k = int(rng.integers(1, 4))
            sites = sorted(rng.choice(2 * N + 1, size=k, replace=False).tolist())
            M = float(rng.uniform(5.0, 50.0))
            for s in sites:
                diag[s] = M * float(rng.choice([-1.0, 1.0])) * float(rng.uniform(1.0, 3.0))
            rep = perturb.verify_norm_bound(diag, sites)
            add("norm_bound", f"fixture_{i}", rep.holds, lhs=rep.lhs, rhs=rep.rhs)
    if "lemma_main" in suites:
        done = 0
        s = 0
        while done < min(n_fixtures, 20) and s < 400:
            diag = analysis.symmetric_fixture(N=50, disorder=12.0, seed=seed * 1000 + s)
            s += 1
            J = analysis.choose_window(diag)
            if J is None:
                continue
            reports = analysis.lemma_main_verify(diag, J)
            if not reports:
                continue
            ok = all(r.holds for r in reports) and all(
                r.overlap <= 1e-8 for r in reports
            )
            add("lemma_main", f"fixture_{done}", ok, pairs=len(reports))
            done += 1
        add("lemma_main", "found_enough_fixtures", done >= min(n_fixtures, 20) // 2,
            found=done)
    if "flow" in suites:
        free = potentials.make_builtin("constant", value=0.0)
        curve = perturb.trace_gap_flow(
            free, 0.0, Frequency.rational(1, 2), Arc(2.0, -2.0),
            Arc(0.0, 0.0, full_circle=True), n_samples=17,
        )
        root = perturb.gap_eigenvalue(free, 0.0, Frequency.rational(1, 2),
                                      Arc(2.0, -2.0), 3.0)
        add("flow", "free_t3_closed_form",
            root.found and abs(root.lam - math.sqrt(13.0)) < 1e-8,
            lam=root.lam if root.found else None)
        add("flow", "free_full_circle_traced", len(curve.samples) >= 15)
    if "lyapunov" in suites:
        free = {"kind": "constant", "value": 0.0}
        res = spectra.lyapunov(
            _potential_build(free), 0.0, Frequency.golden(), 3.0, seed=seed
        )
        ref = math.log((3.0 + math.sqrt(5.0)) / 2.0)
        add("lyapunov", "free_E3", abs(res.value - ref) < 0.01,
            value=res.value, reference=ref)
    return records, (2 if failed else 0)


_COMMANDS = {
    "bands": _cmd_bands,
    "lyapunov": _cmd_lyapunov,
    "gapflow": _cmd_gapflow,
    "winding": _cmd_winding,
    "hull": _cmd_hull,
    "cantor-trend": _cmd_cantor_trend,
    "gap-filling": _cmd_gap_filling,
    "verify": _cmd_verify,
}


def run_sweep(cfg, command=None, workers=1, seed=1):
    """Run one command over its grid; returns (records, exit_code).  Work
    items are independent and merged in grid order regardless of completion
    order, so output is deterministic across worker counts."""
    command = command or cfg.command
    if command not in _COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if cfg.command and command != cfg.command:
        raise ConfigError(
            f"config requests command {cfg.command!r}, invoked as {command!r}"
        )
    return _COMMANDS[command](cfg, workers, seed)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cantor-spec",
        description="spectral laboratory for quasiperiodic operators with "
                    "monotone discontinuous potentials",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--svg", default=None)
    parser.add_argument("--fig", default=None,
                        help="figure image path (default: <out>.png)")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        workers = args.workers
        if workers is None:
            env = os.environ.get("CANTOR_SPEC_WORKERS")
            workers = int(env) if env else None
        if workers is None:
            workers = cfg.get("job", "workers", int, default=None)
            if workers is None:
                workers = cfg.get("job", "worker_count", int, default=1)
        if workers < 1:
            raise ConfigError("worker count must be >= 1")
        seed = args.seed
        if seed is None:
            seed = cfg.get("job", "seed", int, default=1)
        records, code = run_sweep(cfg, args.command, workers=workers, seed=seed)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"cantor-spec: error: {exc}", file=sys.stderr)
        return 1

    lines = report.record_lines(records)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        fig_path = args.fig or (args.out + ".png")
        try:
            report.render_figure(records, fig_path, title=args.command)
        except DomainError:
            pass            # nothing plottable for this command
    else:
        for line in lines:
            print(line)
    if args.svg:
        try:
            svg = report.emit_svg(records)
        except DomainError as exc:
            print(f"cantor-spec: error: {exc}", file=sys.stderr)
            return 1
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return code


if __name__ == "__main__":
    sys.exit(main())
