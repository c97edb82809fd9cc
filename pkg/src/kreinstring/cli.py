"""Command-line front end: ``krein <subcommand> ...``.

Exit status: 0 success, 1 failed identity (verify), 2 input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import asymptotics as asy
from . import forward as fwd
from . import twospectra as ts
from .errors import DomainError, InputError, NumericalFailure, UnboundedTailError
from .measure import MassDistribution, _load_json

log = logging.getLogger("kreinstring")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class StageFailure(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


# -- deterministic serialization ----------------------------------------------------------

def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj, indent=0) -> str:
    """JSON with 17-significant-digit floats and insertion-ordered keys.

    Non-finite floats become null; the accompanying verdict fields say why.
    """
    obj = _plain(obj)
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (pad + json.dumps(k) + ": " + dumps(v, indent + 1) for k, v in obj.items())
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# -- configuration ----------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    inputs: list
    n_max: int
    tol: float
    z_start: float
    z_factor: float
    z_count: int
    alpha: float
    tail_class: str | None
    tail_b: float | None
    tail_beta: float | None
    output: str | None
    fmt: str

    def check(self):
        if not 0 < self.tol <= 1e-2:
            raise InputError("must lie in (0, 1e-2]", "--tol")
        if not self.z_factor > 1:
            raise InputError("must exceed 1", "--z-factor")
        if self.n_max < 1:
            raise InputError("must be at least 1", "--n-max")
        if self.z_count < 1:
            raise InputError("must be at least 1", "--z-count")

    def grid(self):
        return [self.z_start * self.z_factor**k for k in range(self.z_count)]


_DEFAULTS = {
    # command: (n_max, tol, z_start, z_factor, z_count)
    "spectrum": (200, 1e-12, 1.0, 2.0, 10),
    "compliance": (200, 1e-12, -1.0, 10 ** (2 / 19), 20),
    "barcilon": (200, 1e-12, 1.0, 2.0, 10),
    "tau": (200, 1e-12, 1.0, 2.0, 10),
    "kasahara": (200, 1e-6, 100.0, 2.0, 16),
    "verify": (200, 1e-2, 100.0, 2.0, 16),
    "classify": (128, 1e-12, 1.0, 2.0, 10),
}


def _parser():
    p = argparse.ArgumentParser(prog="krein", description="Krein string spectral toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n-max", type=int, default=None, help="number of eigenvalue pairs")
        sp.add_argument("--tol", type=float, default=None, help="tolerance in (0, 1e-2]")
        sp.add_argument("--z-start", type=float, default=None, help="first grid point")
        sp.add_argument("--z-factor", type=float, default=None, help="geometric grid ratio (> 1)")
        sp.add_argument("--z-count", type=int, default=None, help="number of grid points")
        sp.add_argument("--alpha", type=float, default=1.0, help="exponent in M(x) ~ c x^alpha")
        sp.add_argument("--tail-class", choices=["quadratic", "quartic", "none"], default=None,
                        help="reference class for the unstored tail")
        sp.add_argument("--tail-b", type=float, default=None, help="tail scale b (fitted if omitted)")
        sp.add_argument("--tail-beta", type=float, default=None, help="remainder exponent (fitted if omitted)")
        sp.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=["json", "csv"], default="json", dest="fmt")
        return sp

    common(sub.add_parser("spectrum", help="forward spectra of a mass file")).add_argument("input")
    sp = common(sub.add_parser("compliance", help="T(z) from spectra on a z grid"))
    sp.add_argument("input")
    sp.add_argument("--mass", default=None, help="mass file for a forward-computed column")
    sp = common(sub.add_parser("barcilon", help="density at the origin from two spectra"))
    sp.add_argument("input")
    sp.add_argument("--table", default=None, help="write the convergence table as CSV here")
    sp = common(sub.add_parser("tau", help="main spectral function on a lambda grid"))
    sp.add_argument("input")
    sp.add_argument("--check", action="store_true", help="add a Stieltjes-inversion column")
    sp = common(sub.add_parser("kasahara", help="mass-at-origin limit for exponent alpha"))
    sp.add_argument("input")
    sp.add_argument("--source", choices=["compliance", "tau"], default="compliance")
    common(sub.add_parser("verify", help="cross-check identities for a mass file")).add_argument("input")
    common(sub.add_parser("classify", help="zero-density classifier")).add_argument("input")
    return p


def _config(ns) -> RunConfig:
    d = _DEFAULTS[ns.command]
    pick = lambda v, i: d[i] if v is None else v  # noqa: E731
    return RunConfig(ns.command, [ns.input], pick(ns.n_max, 0), pick(ns.tol, 1), pick(ns.z_start, 2),
                     pick(ns.z_factor, 3), pick(ns.z_count, 4), ns.alpha, ns.tail_class,
                     ns.tail_b, ns.tail_beta, ns.output, ns.fmt)


# -- input helpers ------------------------------------------------------------------------

def _load_any(path):
    data = _load_json(path)
    if isinstance(data, dict) and "mu" in data:
        return ts.TwoSpectra.from_dict(data)
    return MassDistribution.from_dict(data)


def _spectra(path, cfg: RunConfig) -> ts.TwoSpectra:
    obj = _load_any(path)
    if isinstance(obj, MassDistribution):
        raise InputError("expected a spectra file (with 'mu' and 'lambda')", path)
    return _apply_tail(obj, cfg)


def _apply_tail(S: ts.TwoSpectra, cfg: RunConfig) -> ts.TwoSpectra:
    kind = cfg.tail_class or S.tail.kind
    if kind == "none":
        return S.with_tail(ts.TailModel()) if cfg.tail_class else S
    b = cfg.tail_b if cfg.tail_b is not None else (S.tail.b if S.tail.kind == kind else None)
    beta = cfg.tail_beta if cfg.tail_beta is not None else (
        S.tail.beta if S.tail.kind == kind else None)
    try:
        if b is None or (isinstance(b, float) and math.isnan(b)):
            fitted = ts.fit_tail(S.mu, S.lam, kind)
            b = fitted.b
            beta = fitted.beta if beta is None else beta
        return S.with_tail(ts.TailModel(kind, float(b), float(beta or 0.0)))
    except DomainError as exc:
        raise InputError(str(exc), "tail") from exc


def _require_valid(S: ts.TwoSpectra):
    diag = ts.validate(S)
    if diag.first_violation is not None:
        raise InputError("; ".join(diag.messages), f"index {diag.first_violation}")
    for m in diag.messages:
        log.warning(m)
    return diag


def _forward_spectra(M: MassDistribution, n_max: int, tol: float):
    s1 = fwd.eigenvalues_s1(M, n_max, tol)
    s0 = fwd.eigenvalues_s0(M, n_max, tol)
    return s1, s0


def _emit(text: str, cfg: RunConfig, out):
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


# -- subcommands ------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, out):
    M = MassDistribution.load(cfg.inputs[0])
    s1, s0 = _forward_spectra(M, cfg.n_max, cfg.tol)
    lam = s0.values[: len(s1.values)]
    doc = {"L": M.length, "mu": s1.values, "lambda": lam,
           "residuals": {"mu": s1.residuals, "lambda": s0.residuals[: len(lam)]},
           "truncated": bool(s1.truncated or s0.truncated)}
    if cfg.tail_class and cfg.tail_class != "none":
        S = _apply_tail(ts.TwoSpectra(M.length, s1.values, lam), cfg)
        doc["tail"] = S.tail.to_dict()
    if cfg.fmt == "csv":
        rows = [(i + 1, float(m), float(lam[i]) if i < len(lam) else "")
                for i, m in enumerate(s1.values)]
        return to_csv(["n", "mu", "lambda"], rows)
    return dumps(doc) + "\n"


def cmd_compliance(cfg: RunConfig, out, mass_path=None):
    S = _spectra(cfg.inputs[0], cfg)
    _require_valid(S)
    M = MassDistribution.load(mass_path) if mass_path else None
    rows = []
    for z in cfg.grid():
        val, bound = ts.compliance_product(S, z)
        row = [z, float(np.real(val)), bound]
        if M is not None:
            row.append(float(np.real(fwd.compliance_forward(M, z))))
        rows.append(row)
    header = ["z", "T", "bound"] + (["T_forward"] if M is not None else [])
    if cfg.fmt == "csv":
        return to_csv(header, rows)
    return dumps({"columns": header, "rows": rows}) + "\n"


def cmd_barcilon(cfg: RunConfig, out, table_path=None):
    S = _spectra(cfg.inputs[0], cfg)
    _require_valid(S)
    res = ts.barcilon_product(S)
    if table_path:
        with open(table_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(["N", "partial"], res.table))
    if cfg.fmt == "csv":
        return to_csv(["N", "partial"], res.table)
    doc = {"estimate": res.estimate, "bound": res.bound, "raw_product": res.raw,
           "tail": S.tail.to_dict(), "N": len(res.table)}
    return dumps(doc) + "\n"


def cmd_tau(cfg: RunConfig, out, check=False):
    S = _spectra(cfg.inputs[0], cfg)
    _require_valid(S)
    step = ts.spectral_step(S)
    rows = []
    for lam in cfg.grid():
        if lam < 0:
            raise InputError("lambda grid must be nonnegative", "--z-start")
        row = [lam, step(lam)]
        if lam > S.mu[-1] and S.tail.kind != "none":
            log.warning("lambda=%s beyond the stored prefix", lam)
        if check:
            try:
                row.append(ts.stieltjes_inversion(S, lam))
            except DomainError as exc:
                log.warning("%s", exc)
                row.append(math.nan)
        rows.append(row)
    header = ["lambda", "tau"] + (["tau_stieltjes"] if check else [])
    if cfg.fmt == "csv":
        return to_csv(header, rows)
    return dumps({"columns": header, "rows": rows}) + "\n"


def cmd_kasahara(cfg: RunConfig, out, source="compliance"):
    obj = _load_any(cfg.inputs[0])
    grid = [abs(z) for z in cfg.grid()]
    if source == "tau":
        if isinstance(obj, MassDistribution):
            s1, s0 = _forward_spectra(obj, cfg.n_max, 1e-12)
            obj = ts.TwoSpectra(obj.length, s1.values, s0.values[: len(s1.values)],
                                precision=1e-12)
            cfg.tail_class = cfg.tail_class or "quadratic"
        S = _apply_tail(obj, cfg)
        _require_valid(S)
        rep = asy.kasahara_from_tau(S, cfg.alpha)
    else:
        if isinstance(obj, MassDistribution):
            def sampler(z, M=obj):
                return fwd.compliance_forward(M, z)
        else:
            S = _apply_tail(obj, cfg)
            _require_valid(S)

            def sampler(z, S=S):
                return float(np.real(ts.compliance_product(S, z).value))
        rep = asy.kasahara_from_compliance(sampler, cfg.alpha, grid, tol=cfg.tol)
    if cfg.fmt == "csv":
        return to_csv(["parameter", "partial"], rep.table)
    return dumps({"alpha": cfg.alpha, **rep.to_dict()}) + "\n"


def cmd_classify(cfg: RunConfig, out):
    obj = _load_any(cfg.inputs[0])
    mu = fwd.eigenvalues_s1(obj, cfg.n_max).values if isinstance(obj, MassDistribution) else obj.mu
    verdict, info = asy.classify_density(mu)
    if cfg.fmt == "csv":
        return to_csv(["n", "envelope"], info["envelope"])
    return dumps({"verdict": verdict, "slope": info["slope"], "envelope": info["envelope"],
                  "n": len(mu)}) + "\n"


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (NumericalFailure, DomainError, UnboundedTailError, ArithmeticError) as exc:
        raise StageFailure(name, exc) from exc


def run_verify(M: MassDistribution, n_max=200, tol=1e-2, z_grid=fwd.DEFAULT_Z_GRID):
    """Forward solve, then check the two-spectra identities against it.

    Returns a list of rows (identity, lhs, rhs, |diff|, passed).
    """
    s1, s0 = _stage("forward-spectra", _forward_spectra, M, n_max, 1e-12)
    lam = s0.values[: len(s1.values)]
    S = ts.TwoSpectra(M.length, s1.values, lam, precision=1e-12)
    complete = not any(seg for seg in M.segments)
    if not complete:
        S = S.with_tail(_stage("tail-fit", ts.fit_tail, S.mu, S.lam, "quadratic"))
    rows = []
    diag = ts.validate(S)
    rows.append(("interlacing", float(len(S.mu)), float(len(S.lam)), 0.0,
                 diag.first_violation is None))

    zs = -np.geomspace(1, 100, 20)
    worst, worst_ratio = 0.0, 0.0
    for z in zs:
        val, bound = _stage("compliance-product", ts.compliance_product, S, z)
        ref = _stage("compliance-forward", fwd.compliance_forward, M, z)
        d = abs(val - ref)
        worst = max(worst, d)
        worst_ratio = max(worst_ratio, d / bound if bound > 0 else (0.0 if d == 0 else math.inf))
    rows.append(("compliance product vs forward (max |diff| / bound)", worst_ratio, 1.0, worst,
                 worst_ratio <= 1.0))
    t0 = ts.compliance_product(S, 0.0).value
    rows.append(("compliance at zero equals L", t0, M.length, abs(t0 - M.length),
                 t0 == M.length))

    ident = _stage("length-identity", ts.length_identity, S)
    ell = M.massless_right_tail()
    rows.append(("length identity: sum rho/mu = L - ell_inf", ident["residue_sum"],
                 M.length - ell, abs(ident["residue_sum"] - (M.length - ell)),
                 abs(ident["residue_sum"] - (M.length - ell)) <= tol * M.length))
    rows.append(("massless right tail ell_inf (spectra vs mass model)", ident["ell_inf"], ell,
                 abs(ident["ell_inf"] - ell), abs(ident["ell_inf"] - ell) <= tol * M.length))

    dens = _stage("density-at-origin", fwd.density_at_origin_limit, M, z_grid)
    if not complete:
        bar = _stage("barcilon", ts.barcilon_product, S)
        d = abs(dens.estimate - bar.estimate)
        rows.append(("density at origin: compliance limit vs two-spectra product",
                     dens.estimate, bar.estimate, d,
                     d <= tol * max(1.0, abs(bar.estimate)) and dens.converged))
    else:
        rows.append(("density at origin: compliance limit (finite chain, expected 0)",
                     dens.estimate, 0.0, abs(dens.estimate), dens.estimate == 0.0))
    return rows


def cmd_verify(cfg: RunConfig, out):
    M = MassDistribution.load(cfg.inputs[0])
    rows = run_verify(M, cfg.n_max, cfg.tol, cfg.grid())
    if cfg.fmt == "csv":
        text = to_csv(["identity", "lhs", "rhs", "abs_diff", "pass"],
                      [(n, float(a), float(b), float(c), "pass" if ok else "fail")
                       for n, a, b, c, ok in rows])
    else:
        text = dumps({"rows": [{"identity": n, "lhs": a, "rhs": b, "abs_diff": c, "pass": ok}
                               for n, a, b, c, ok in rows],
                      "all_pass": all(r[4] for r in rows)}) + "\n"
    return text, all(r[4] for r in rows)


# -- entry point ------------------------------------------------------------------------

def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    level = os.environ.get("KREIN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=err,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    cfg = _config(ns)
    status = EXIT_OK
    try:
        cfg.check()
        if cfg.command == "spectrum":
            text = cmd_spectrum(cfg, out)
        elif cfg.command == "compliance":
            text = cmd_compliance(cfg, out, ns.mass)
        elif cfg.command == "barcilon":
            text = cmd_barcilon(cfg, out, ns.table)
        elif cfg.command == "tau":
            text = cmd_tau(cfg, out, ns.check)
        elif cfg.command == "kasahara":
            text = cmd_kasahara(cfg, out, ns.source)
        elif cfg.command == "classify":
            text = cmd_classify(cfg, out)
        else:
            text, ok = cmd_verify(cfg, out)
            status = EXIT_OK if ok else 1
        _emit(text, cfg, out)
    except StageFailure as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    except (InputError, DomainError, UnboundedTailError, FileNotFoundError, IsADirectoryError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NumericalFailure as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    return status


if __name__ == "__main__":
    sys.exit(main())
