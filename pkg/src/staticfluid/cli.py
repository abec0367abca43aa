"""Command-line front end.

Subcommands: ``catalog``, ``solve``, ``verify``, ``energy``,
``phase-portrait`` and ``geodesics``.  Exit codes are 0 on success, 1 for
usage errors, 2 for numerical failures and 3 when verification fails.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import catalog, geodesics, geometry, reduction, verifier
from ._io import dumps_json, svg_polylines, write_csv
from ._ode import IntegratorConfig
from .errors import DecompositionError, DomainError, IntegrationError, StaticFluidError
from .geometry import Interval, Jet2, Signature

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

SOLVE_COLUMNS = ("xi", "phi", "dphi", "d2phi", "f", "df", "d2f", "mu", "rho", "edo_residual", "dominant")
PORTRAIT_COLUMNS = ("traj_id", "f0", "df0", "xi", "f", "df")
PORTRAIT_META_COLUMNS = ("traj_id", "f0", "df0", "xi_lo", "xi_hi", "status", "events", "max_residual")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """Validated command-line configuration."""

    command: str
    n: int | None = None
    signature: str | None = None
    alpha: tuple | None = None
    example: str | None = None
    params: dict = field(default_factory=dict)
    interval: Interval | None = None
    samples: int | None = None
    lapse: str = "closed"
    f0: float | None = None
    df0: float | None = None
    xi0: float | None = None
    tol: float | None = None
    verify_tol: float = 5e-4
    h: float = 1e-3
    richardson: bool = True
    perturb: float | None = None
    rho_mode: str = "direct"
    seed: int = geodesics.DEFAULT_SEED
    lambda_max: float = 1000.0
    grid: tuple = (5, 5)
    f0_range: tuple = (-1.0, 1.0)
    df0_range: tuple = (-1.0, 1.0)
    svg: str | None = None
    svg_box: Interval = Interval(-3.0, 3.0)
    meta: str | None = None
    trajectories: str | None = None
    format: str | None = None
    out: str | None = None


# ---------------------------------------------------------------------------
# parsing


def _value(text: str):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def _params(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects k=v, got {item!r}")
        out[key.strip()] = _value(val.strip())
    return out


def _interval(text: str | None) -> Interval | None:
    if text is None:
        return None
    try:
        return Interval.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


class Range(NamedTuple):
    """Closed sampling range; unlike :class:`Interval` it may be a single point."""

    lo: float
    hi: float


def _range(text: str) -> Range:
    lo, sep, hi = text.partition(":")
    try:
        r = Range(float(lo), float(hi)) if sep else Range(float(lo), float(lo))
    except ValueError:
        raise UsageError(f"expected a:b, got {text!r}") from None
    if not (math.isfinite(r.lo) and math.isfinite(r.hi) and r.lo <= r.hi):
        raise UsageError(f"bad range {text!r}")
    return r


def _alpha(text: str | None) -> tuple | None:
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--alpha expects comma-separated reals, got {text!r}") from None


def _grid(text: str) -> tuple[int, int]:
    a, sep, b = text.lower().partition("x")
    try:
        counts = (int(a), int(b)) if sep else (int(a), int(a))
    except ValueError:
        raise UsageError(f"--grid expects NxM, got {text!r}") from None
    if min(counts) < 1:
        raise UsageError("--grid counts must be positive")
    return counts


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int, help="spatial dimension (n >= 3)")
    common.add_argument("--signature", help='one sign per spatial dimension, e.g. "-++"')
    common.add_argument("--alpha", help="direction as comma-separated reals")
    common.add_argument("--example", help="catalog id, or 'flat' for phi = f = 1")
    common.add_argument("--param", action="append", metavar="K=V", help="catalog parameter (repeatable)")
    common.add_argument("--interval", help="xi range a:b")
    common.add_argument("--lapse", choices=("closed", "numeric"), default="closed")
    common.add_argument("--f0", type=float)
    common.add_argument("--df0", type=float)
    common.add_argument("--xi0", type=float, help="where --f0/--df0 are imposed")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default: stdout)")

    p = _Parser(prog="staticfluid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("catalog", parents=[common], help="list the closed-form families")

    s = sub.add_parser("solve", parents=[common], help="tabulate profiles, density and pressure")
    s.add_argument("--samples", type=int, default=101)
    s.add_argument("--rho-mode", choices=("direct", "eliminate_f2"), default="direct")
    s.add_argument("--tol", type=float, help="relative tolerance of the lapse integrator")

    v = sub.add_parser("verify", parents=[common], help="finite-difference curvature check")
    v.add_argument("--samples", type=int, default=50)
    v.add_argument("--h", type=float, default=1e-3)
    v.add_argument("--richardson", action=argparse.BooleanOptionalAction, default=True)
    v.add_argument("--tol", type=float, default=5e-4, help="pass threshold for residuals")
    v.add_argument("--perturb", type=float, help="multiply f by 1 + P tau^2 (negative control)")

    e = sub.add_parser("energy", parents=[common], help="scan mu > |rho|")
    e.add_argument("--samples", type=int, default=101)

    pp = sub.add_parser("phase-portrait", parents=[common], help="sample (f(0), f'(0)) trajectories")
    pp.add_argument("--grid", default="5x5")
    pp.add_argument("--f0-range", default="-1:1")
    pp.add_argument("--df0-range", default="-1:1")
    pp.add_argument("--samples", type=int, default=201)
    pp.add_argument("--tol", type=float, help="relative tolerance of the lapse integrator")
    pp.add_argument("--svg", help="also write an SVG of the (f, f') curves")
    pp.add_argument("--svg-box", default="-3:3", help="square plot range a:b for both axes")
    pp.add_argument("--meta", help="per-trajectory termination table (default: OUT.meta.csv)")

    g = sub.add_parser("geodesics", parents=[common], help="seeded geodesic completeness probe")
    g.add_argument("--samples", type=int, default=100)
    g.add_argument("--lambda-max", type=float, default=1000.0)
    g.add_argument("--seed", type=int, default=geodesics.DEFAULT_SEED)
    g.add_argument("--tol", type=float, help="relative tolerance of the geodesic integrator")
    g.add_argument("--trajectories", help="write all trajectory samples as CSV")
    return p


def _attach_dash_values(argv: Sequence[str]) -> list[str]:
    """Rewrite ``--opt -x`` as ``--opt=-x`` so values like ``-++`` or ``-1:2`` parse."""
    out = list(argv)
    k = 0
    while k < len(out) - 1:
        tok, nxt = out[k], out[k + 1]
        if tok.startswith("--") and "=" not in tok and nxt.startswith("-") and not nxt.startswith("--") \
                and nxt not in ("-h",):
            out[k:k + 2] = [f"{tok}={nxt}"]
        k += 1
    return out


def parse_config(argv: Sequence[str] | None) -> RunConfig:
    argv = sys.argv[1:] if argv is None else argv
    ns = build_parser().parse_args(_attach_dash_values(argv))
    cfg = RunConfig(
        command=ns.command,
        n=ns.n,
        signature=ns.signature,
        alpha=_alpha(ns.alpha),
        example=ns.example,
        params=_params(ns.param),
        interval=_interval(ns.interval),
        lapse=ns.lapse,
        f0=ns.f0,
        df0=ns.df0,
        xi0=ns.xi0,
        format=ns.format,
        out=ns.out,
    )
    for name in ("samples", "tol", "h", "richardson", "perturb", "rho_mode", "seed", "lambda_max",
                 "svg", "meta", "trajectories"):
        if hasattr(ns, name) and getattr(ns, name) is not None:
            setattr(cfg, name, getattr(ns, name))
    if cfg.command == "verify":
        cfg.verify_tol, cfg.tol = cfg.tol, None
        if not cfg.verify_tol > 0:
            raise UsageError("--tol must be positive")
    if hasattr(ns, "grid"):
        cfg.grid = _grid(ns.grid)
        cfg.f0_range = _range(ns.f0_range)
        cfg.df0_range = _range(ns.df0_range)
        cfg.svg_box = _interval(ns.svg_box)
    if cfg.samples is not None and cfg.samples < (1 if cfg.command == "geodesics" else 2):
        raise UsageError("--samples is too small")
    if cfg.tol is not None and not cfg.tol > 0:
        raise UsageError("--tol must be positive")
    if not cfg.h > 0:
        raise UsageError("--h must be positive")
    if cfg.command == "geodesics" and not cfg.lambda_max > 0:
        raise UsageError("--lambda-max must be positive")
    allowed = {"catalog": ("json", "csv"), "solve": ("csv", "json"), "phase-portrait": ("csv",),
               "verify": ("json",), "energy": ("json",), "geodesics": ("json",)}[cfg.command]
    if cfg.format is None:
        cfg.format = allowed[0]
    elif cfg.format not in allowed:
        raise UsageError(f"{cfg.command} does not support --format {cfg.format}")
    return cfg


# ---------------------------------------------------------------------------
# spec construction


def _flat_entry(n: int) -> catalog.CatalogEntry:
    one = Jet2(1.0, 0.0, 0.0)
    return catalog.CatalogEntry("flat", n, {"n": n}, Interval(-math.inf, math.inf), Interval(-1.0, 1.0),
                                lambda xi: one, lambda xi: one)


def resolve_entry(cfg: RunConfig, default: str | None = None) -> catalog.CatalogEntry:
    example = cfg.example or default
    if example is None:
        raise UsageError("--example is required")
    params = dict(cfg.params)
    sig_n = len(cfg.signature) if cfg.signature else None
    if cfg.n is not None and sig_n is not None and cfg.n != sig_n:
        raise UsageError(f"--n {cfg.n} disagrees with --signature of length {sig_n}")
    n = cfg.n or sig_n or params.get("n")
    if n is not None:
        if "n" in params and params["n"] != n:
            raise UsageError("conflicting values of n")
        params["n"] = int(n)
    if example == "flat":
        extra = set(params) - {"n"}
        if extra:
            raise UsageError(f"flat takes no parameters besides n, got {sorted(extra)}")
        return _flat_entry(params.get("n", 3))
    return catalog.build(example, **params)


def _integrator(cfg: RunConfig) -> IntegratorConfig | None:
    return IntegratorConfig(rel_tol=cfg.tol) if cfg.tol is not None else None


def resolve_spec(cfg: RunConfig, entry: catalog.CatalogEntry, interval: Interval | None = None):
    signature = Signature.from_string(cfg.signature) if cfg.signature else None
    alpha = np.asarray(cfg.alpha) if cfg.alpha is not None else None
    lapse = cfg.lapse if entry.f is not None else "numeric"
    if lapse == "closed":
        return entry.to_spec(signature, alpha)
    return entry.to_spec(signature, alpha, lapse="numeric", f0=cfg.f0, df0=cfg.df0, xi0=cfg.xi0,
                         interval=interval or cfg.interval, config=_integrator(cfg))


def _spec_block(cfg: RunConfig, spec, entry, interval: Interval) -> dict:
    return {
        "n": spec.n,
        "signature": str(spec.signature),
        "alpha": [float(a) for a in spec.direction.array],
        "example": entry.id,
        "params": dict(sorted(entry.params.items())),
        "interval": [interval.lo, interval.hi],
        "lapse": spec.meta.get("lapse", "closed"),
    }


# ---------------------------------------------------------------------------
# commands


def cmd_catalog(cfg: RunConfig) -> list[dict]:
    return catalog.listing(cfg.example)


@dataclass
class SolveResult:
    rows: list
    error: str | None = None


def _solve_rows(spec, xs, rho_mode: str) -> list:
    n, a2 = spec.n, spec.direction.norm2
    profile = spec.meta.get("f_profile")
    rows = []
    for x in xs:
        x = float(x)
        phi = spec.phi(x)
        if profile is not None:
            # f'' read off the integrated solution so the residual is not zero by construction
            f, _ = profile.measured_jet(x)
        else:
            f = spec.f(x)
        mu = reduction.mu_of(n, a2, phi)
        rho = reduction.rho_of(n, a2, phi, f, rho_mode)
        res = reduction.edo_residual(n, phi, f)
        rows.append((x, phi.value, phi.d1, phi.d2, f.value, f.d1, f.d2, mu, rho, res, bool(mu > abs(rho))))
    return rows


def cmd_solve(cfg: RunConfig) -> SolveResult:
    entry = resolve_entry(cfg)
    interval = cfg.interval or entry.window
    samples = cfg.samples or 101
    try:
        spec = resolve_spec(cfg, entry, interval)
    except IntegrationError as exc:
        partial = exc.partial
        sig = Signature.from_string(cfg.signature) if cfg.signature else Signature.euclidean(entry.n)
        direction = (geometry.Direction.from_alpha(sig, np.asarray(cfg.alpha)) if cfg.alpha is not None
                     else entry.default_direction(sig))
        spec = geometry.SpacetimeSpec(sig, direction, entry.phi, partial, partial.domain, meta={"f_profile": partial})
        xs = np.linspace(partial.domain.lo, partial.domain.hi, samples)
        return SolveResult(_solve_rows(spec, xs, cfg.rho_mode), str(exc))
    if "f_profile" in spec.meta:
        interval = spec.meta["f_profile"].domain
    else:
        for end in (interval.lo, interval.hi):
            if not (spec.interval.lo < end < spec.interval.hi):
                raise UsageError(f"xi={end} is outside the domain {spec.interval} of {entry.id}")
    xs = np.linspace(interval.lo, interval.hi, samples)
    return SolveResult(_solve_rows(spec, xs, cfg.rho_mode))


def cmd_verify(cfg: RunConfig) -> dict:
    entry = resolve_entry(cfg)
    interval = cfg.interval or entry.window
    spec = resolve_spec(cfg, entry, interval)
    if cfg.perturb is not None:
        spec = verifier.perturb_lapse(spec, cfg.perturb, window=interval)
    tol = cfg.verify_tol
    grid = verifier.line_grid(spec, cfg.samples or 50, interval)
    fd = verifier.FDConfig(h=cfg.h, richardson=cfg.richardson, grid=tuple(grid), tol=tol)
    rep = verifier.verify_spacetime(spec, fd)
    block = _spec_block(cfg, spec, entry, interval)
    if cfg.perturb is not None:
        block["perturb"] = cfg.perturb
    return {
        "spec": block,
        "grid": {"points": len(grid), "h": cfg.h, "richardson": cfg.richardson},
        "results": {
            "max_traceless_residual": rep.max_traceless_residual,
            "max_trace_residual": rep.max_trace_residual,
            "max_mu_error": rep.max_mu_error,
            "max_rho_error": rep.max_rho_error,
            "max_fluid_residual": rep.max_fluid_residual,
            "eigen_ok": rep.eigen_ok,
            "multiplicities": rep.multiplicities,
            "degenerate_points": rep.degenerate_points,
            "vacuum_degenerate": rep.vacuum_degenerate,
            "points_checked": rep.points_checked,
            "skipped": rep.skipped,
        },
        "tol": tol,
        "pass": rep.passed(tol),
    }


def cmd_energy(cfg: RunConfig) -> dict:
    entry = resolve_entry(cfg)
    interval = cfg.interval or entry.window
    spec = resolve_spec(cfg, entry, interval)
    if "f_profile" in spec.meta:
        interval = spec.meta["f_profile"].domain
    xs = np.linspace(interval.lo, interval.hi, cfg.samples or 101)
    fields = reduction.fluid_fields(spec, xs)
    summary = reduction.energy_condition_scan(fields)
    return {
        "spec": _spec_block(cfg, spec, entry, interval),
        "samples": len(xs),
        "fraction_dominant": summary.fraction_dominant,
        "first_violation": summary.first_violation,
        "mu_range": [float(fields.mu.min()), float(fields.mu.max())],
        "rho_range": [float(fields.rho.min()), float(fields.rho.max())],
    }


@dataclass
class PortraitResult:
    rows: list
    meta: list
    curves: list
    svg: str | None = None


def cmd_phase_portrait(cfg: RunConfig) -> PortraitResult:
    entry = resolve_entry(cfg, default="secant")
    interval = cfg.interval or Interval(-2.5, 2.5).intersect(entry.domain)
    xi0 = 0.0 if cfg.xi0 is None else cfg.xi0
    nf, nd = cfg.grid
    (flo, fhi), (dlo, dhi) = cfg.f0_range, cfg.df0_range
    f0s = np.linspace(flo, fhi, nf) if nf > 1 else np.array([flo])
    df0s = np.linspace(dlo, dhi, nd) if nd > 1 else np.array([dlo])
    xs = np.linspace(interval.lo, interval.hi, cfg.samples or 201)
    rows, meta, curves = [], [], []
    traj = 0
    for f0 in f0s:
        for df0 in df0s:
            status = "complete"
            try:
                prof = reduction.solve_f(entry.n, entry.phi, xi0, float(f0), float(df0), interval,
                                         _integrator(cfg), positive=False)
                if prof.truncated:
                    status = "truncated"
            except IntegrationError as exc:
                prof, status = exc.partial, f"failed: {exc}"
            lo, hi = prof.domain.lo, prof.domain.hi
            inside = [float(x) for x in xs if lo <= x <= hi]
            worst = 0.0
            curve = []
            for x in inside:
                fv, dfv = prof.state(x)
                rows.append((traj, float(f0), float(df0), x, float(fv), float(dfv)))
                curve.append((float(fv), float(dfv)))
                worst = max(worst, prof.defect(x))
            events = ";".join(f"{name}@{t:.17g}" for name, t in prof.events)
            meta.append((traj, float(f0), float(df0), lo, hi, status, events, worst))
            curves.append(np.array(curve))
            traj += 1
    svg = None
    if cfg.svg:
        box = (cfg.svg_box.lo, cfg.svg_box.hi)
        svg = svg_polylines(curves, box, box)
    return PortraitResult(rows, meta, curves, svg)


def cmd_geodesics(cfg: RunConfig) -> geodesics.ProbeSummary:
    entry = resolve_entry(cfg)
    spec = resolve_spec(cfg, entry)
    xi_range = cfg.interval or entry.window
    config = None
    if cfg.tol is not None:
        config = IntegratorConfig(rel_tol=cfg.tol, abs_tol=geodesics.GEODESIC_CONFIG.abs_tol)
    return geodesics.completeness_probe(spec, cfg.samples or 100, cfg.lambda_max, config, cfg.seed, xi_range)


# ---------------------------------------------------------------------------
# output


def _emit(text: str, path: str | None, stdout) -> None:
    if path is None:
        stdout.write(text)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if cfg.command == "catalog":
        items = cmd_catalog(cfg)
        if cfg.format == "csv":
            rows = [(e["id"], e["n"], ";".join(f"{k}={v}" for k, v in e["params"].items()),
                     e["domain"][0], e["domain"][1], ";".join(e["errata"])) for e in items]
            _emit(_csv_text(("id", "n", "params", "domain_lo", "domain_hi", "errata"), rows), cfg.out, stdout)
        else:
            _emit(dumps_json(items), cfg.out, stdout)
        return EXIT_OK

    if cfg.command == "solve":
        res = cmd_solve(cfg)
        if cfg.format == "json":
            text = dumps_json([dict(zip(SOLVE_COLUMNS, r)) for r in res.rows])
        else:
            text = _csv_text(SOLVE_COLUMNS, res.rows)
        _emit(text, cfg.out, stdout)
        if res.error:
            stderr.write(f"staticfluid: {res.error} (partial table written)\n")
            return EXIT_NUMERIC
        return EXIT_OK

    if cfg.command == "verify":
        doc = cmd_verify(cfg)
        _emit(dumps_json(doc), cfg.out, stdout)
        if doc["results"]["points_checked"] == 0:
            stderr.write("staticfluid: every grid point was skipped\n")
            return EXIT_NUMERIC
        return EXIT_OK if doc["pass"] else EXIT_VERIFY

    if cfg.command == "energy":
        _emit(dumps_json(cmd_energy(cfg)), cfg.out, stdout)
        return EXIT_OK

    if cfg.command == "phase-portrait":
        res = cmd_phase_portrait(cfg)
        _emit(_csv_text(PORTRAIT_COLUMNS, res.rows), cfg.out, stdout)
        meta_path = cfg.meta or (cfg.out + ".meta.csv" if cfg.out else None)
        meta_text = _csv_text(PORTRAIT_META_COLUMNS, res.meta)
        if meta_path is not None:
            _emit(meta_text, meta_path, stdout)
        bad = [m for m in res.meta if m[5] != "complete"]
        if bad:
            stderr.write(f"staticfluid: {len(bad)} of {len(res.meta)} trajectories stopped early\n")
        if res.svg is not None:
            _emit(res.svg, cfg.svg, stdout)
        return EXIT_OK

    if cfg.command == "geodesics":
        summary = cmd_geodesics(cfg)
        _emit(dumps_json(summary.as_dict()), cfg.out, stdout)
        if cfg.trajectories:
            with open(cfg.trajectories, "w", newline="", encoding="utf-8") as fh:
                geodesics.write_trajectories_csv(summary.trajectories, fh)
        return EXIT_OK
    raise UsageError(f"unknown command {cfg.command!r}")


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        cfg = parse_config(argv)
        return run(cfg, stdout, stderr)
    except UsageError as exc:
        stderr.write(f"staticfluid: usage error: {exc}\n")
        return EXIT_USAGE
    except (IntegrationError, DomainError, DecompositionError, ArithmeticError) as exc:
        stderr.write(f"staticfluid: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (StaticFluidError, ValueError) as exc:
        stderr.write(f"staticfluid: usage error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
