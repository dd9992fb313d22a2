"""``dolbeault-lab``: configuration-driven experiments with CSV output.

Every subcommand reads optional settings from a TOML file (``--config``),
lets command-line flags override them, and writes a CSV table to
``--out`` (default: standard output).  The first lines of the CSV are
comments: ``# schema=1``, the subcommand, a hash of the resolved
configuration and the seed.  Wall time goes to standard error so that
the CSV body is byte-identical across runs.

Exit codes: 0 when every check in the run passes, 1 when a numerical
check fails (the failing rows are named on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from ._validation import check_resolutions
from .analysis import TestFamily, operator_norm_sample, weighted_lp_norm, witness_suite
from .cauchy import area_transform_reference, weighted_cauchy_area
from .domain import Disc, ProductDomain, build_factor_grid, build_grid, domain_from_dict
from .forms import form_to_csv
from .homotopy import homotopy_residual
from .library import named_form, named_function
from .solver import SolveConfig, solve, verify_solution
from .weights import (as_exponent, as_rational, brute_force_dbar_weight, brute_force_modified_weight,
                      dbar_weight, dbar_weight_decomposition, gap_condition, modified_dbar_weight,
                      parse_rational_list, weight_gap)

SCHEMA = 1
FMT = "%.10e"

ORACLE_P = ["1", "9/8", "3/2", "2", "3", "4", "10", "inf"]
ORACLE_S = [str(Fraction(i, 12)) for i in range(-36, 37)]
WITNESS_PAIRS = [("2", "1/2"), ("2", "0"), ("inf", "0"), ("inf", "1/2"), ("1", "1/2"), ("3", "1/3"), ("3/2", "1/4"),
                 ("4", "3/4")]


class UsageError(Exception):
    """Invalid configuration; the message names the offending field."""


class Table:
    """CSV rows plus the names of failed rows."""

    def __init__(self, header):
        self.header = list(header)
        self.rows = []
        self.failures = []

    def add(self, *row, ok: bool = True, label: str | None = None):
        self.rows.append(list(row))
        if not ok:
            self.failures.append(label or ",".join(_fmt(x) for x in row[:3]))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        if np.isnan(x):
            return "nan"
        return FMT % x
    if isinstance(x, (complex, np.complexfloating)):
        return f"{FMT % x.real}{'+' if x.imag >= 0 else '-'}{FMT % abs(x.imag)}j"
    return str(x)


# ---------------------------------------------------------------------------
# configuration helpers

def _rational(cfg, key, default):
    v = cfg.get(key, default)
    try:
        return as_rational(v if not isinstance(v, float) else repr(v))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{key}: {exc}") from None


def _exponent(cfg, key="p", default="2"):
    try:
        return as_exponent(str(cfg.get(key, default)))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{key}: {exc}") from None


def _rational_list(v, key):
    try:
        if isinstance(v, str):
            return parse_rational_list(v)
        return [as_rational(str(x)) for x in v]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{key}: {exc}") from None


def _resolution(v, key):
    if isinstance(v, str):
        parts = [int(t) for t in v.split(",") if t.strip()]
        return parts[0] if len(parts) == 1 else tuple(parts)
    if isinstance(v, (list, tuple)):
        return tuple(int(t) for t in v)
    return int(v)


def _resolutions(cfg, default):
    raw = cfg.get("resolutions", default)
    if isinstance(raw, str):
        raw = [t for t in raw.split(";") if t.strip()]
    try:
        res = [_resolution(r, "resolutions") for r in raw]
        return check_resolutions(res)
    except ValueError as exc:
        raise UsageError(f"resolutions: {exc}") from None


def _product_domain(cfg, key, n, default):
    spec = cfg.get(key)
    try:
        if spec is None:
            return ProductDomain((default,) * n)
        if isinstance(spec, dict):
            return ProductDomain((domain_from_dict(spec),) * n)
        return ProductDomain(tuple(domain_from_dict(s) for s in spec))
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"{key}: {exc}") from None


def _form(cfg, n=None, q=None):
    name = cfg.get("omega", "dz1")
    try:
        return name, named_form(name, n, q)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"omega: {exc}") from None


# ---------------------------------------------------------------------------
# experiments

def run_weights(cfg: dict) -> Table:
    t = Table(["p", "s", "k", "k_tilde", "k0", "k1", "gap", "gap_condition", "brute_k", "brute_k_tilde",
               "match"])
    ps = cfg.get("p", ORACLE_P)
    ss = cfg.get("s", ORACLE_S)
    ps = [str(x) for x in (ps if isinstance(ps, list) else [ps])]
    ss = _rational_list(ss if not isinstance(ss, (int, float)) else [ss], "s")
    if not ps or not ss:
        raise UsageError("p, s: empty sweep")
    for pv in ps:
        try:
            p = as_exponent(pv)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"p: {exc}") from None
        for s in ss:
            k, kt = dbar_weight(p, s), modified_dbar_weight(p, s)
            k0, k1 = dbar_weight_decomposition(p, s)
            gap = weight_gap(p, s)
            gc = gap_condition(p, s)
            bk, bkt = brute_force_dbar_weight(p, s), brute_force_modified_weight(p, s)
            ok = (k == bk and kt == bkt and k == k0 + k1 and gap in (0, 1) and gc == (gap == 0))
            t.add(str(p), str(s), k, kt, k0, k1, gap, gc, bk, bkt, ok, ok=ok, label=f"p={p},s={s}")
    return t


def _targets(cfg, D):
    src = cfg.get("targets")
    if src is None:
        ang = 2 * np.pi * np.arange(12) / 12 + 0.1
        rad = np.array([0.15, 0.45, 0.7])
        pts = (rad[:, None] * np.exp(1j * ang)[None, :]).ravel()
        return D.center + pts * (D.radius if isinstance(D, Disc) else 1.0)
    if isinstance(src, list):
        return np.array([complex(x[0], x[1]) if isinstance(x, list) else complex(x) for x in src])
    path = Path(src)
    if not path.exists():
        raise UsageError(f"targets: no such file {src}")
    pts = []
    for line in path.read_text().splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        parts = [x for x in line.replace(",", " ").split() if x]
        pts.append(complex(float(parts[0]), float(parts[1])) if len(parts) == 2 else complex(parts[0]))
    if not pts:
        raise UsageError(f"targets: {src} lists no points")
    return np.array(pts)


def run_cauchy(cfg: dict) -> Table:
    k = int(cfg.get("k", 0))
    name = cfg.get("f", "one")
    try:
        u, f = named_function(name)
    except KeyError as exc:
        raise UsageError(f"f: {exc}") from None
    D = _product_domain(cfg, "domain", 1, Disc()).factors[0]
    if not isinstance(D, Disc):
        raise UsageError("domain: the cauchy reference needs a disc")
    res = _resolution(cfg.get("resolution", "128,256"), "resolution")
    tol = float(cfg.get("tol", 1e-3))
    z = _targets(cfg, D)
    grid = build_factor_grid(D, res)
    val = weighted_cauchy_area(f, grid, k, z)
    ref = area_transform_reference(u, f, D, k, z)
    t = Table(["z", "value", "reference", "error"])
    for zi, v, r in zip(z, val, ref):
        err = abs(v - r)
        t.add(complex(zi), complex(v), complex(r), float(err), ok=err <= tol, label=f"z={zi}")
    return t


def run_homotopy(cfg: dict) -> Table:
    n = int(cfg.get("n", 2))
    q = cfg.get("q")
    names = cfg.get("omega", ["conjz2_dz1_plus_conjz1_dz2"])
    names = [names] if isinstance(names, str) else list(names)
    if not names:
        raise UsageError("omega: empty form list")
    res = _resolutions(cfg, [16, 32, 64])
    D = _product_domain(cfg, "domain", n, Disc())
    tol = float(cfg.get("tol", 1e-2))
    floor = float(cfg.get("floor", 1e-12))
    t = Table(["omega", "resolution", "residual", "vanishing_boundary", "strictly_decreasing"])
    for name in names:
        try:
            w = named_form(name, n, None if q is None else int(q))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"omega: {exc}") from None
        if q is not None and w.q != int(q):
            raise UsageError(f"omega: {name} has degree {w.q}, not q={q}")
        prev = None
        for r in res:
            rep = homotopy_residual(w, build_grid(D, r), report=True)
            dec = prev is None or rep.residual < prev or rep.residual <= floor
            ok = dec and (r != res[-1] or rep.residual <= tol)
            t.add(name, _fmt_res(r), float(rep.residual), float(rep.vanishing_norm), dec, ok=ok,
                  label=f"{name}@{_fmt_res(r)}")
            prev = rep.residual
    return t


def _fmt_res(r) -> str:
    return "x".join(str(x) for x in r) if isinstance(r, tuple) else str(r)


def _solve_config(cfg, res):
    n = int(cfg.get("n", 1))
    P = _product_domain(cfg, "P", n, Disc())
    Q = _product_domain(cfg, "Q", n, Disc(0j, 0.5))
    s = cfg.get("s", ["0"] * n)
    s = _rational_list(s if isinstance(s, (list, str)) else [s], "s")
    try:
        return SolveConfig(P, Q, p=_exponent(cfg), s=s, mode=cfg.get("mode", "full"),
                           epsilon=_rational(cfg, "epsilon", "1/10"), resolution=res,
                           margins=tuple(cfg.get("margins", (0.05, 0.05))),
                           n_jobs=int(cfg.get("n_jobs", 1)))
    except ValueError as exc:
        raise UsageError(f"solve config: {exc}") from None


def run_solve(cfg: dict, field_out: Path | None = None, trace_out: Path | None = None) -> Table:
    n = int(cfg.get("n", 1))
    name, w = _form(cfg, n)
    res = _resolutions(cfg, [32, 64])
    tol = float(cfg.get("tol", 2e-2))
    drift_tol = float(cfg.get("drift", 0.05))
    t = Table(["omega", "resolution", "residual_on_Q", "norm_eta", "norm_omega", "ratio", "gamma_pattern",
               "trace_law", "trace_law_tolerance", "dbar_support_mass", "theta_on_Q", "drift"])
    prev = None
    for r in res:
        sc = _solve_config(cfg, r)
        eta, tr = solve(w, sc)
        rep = verify_solution(eta, w, sc, tr)
        ta = rep["trace_assertions"]
        drift = 0.0 if prev is None or prev == 0 else abs(rep["norm_eta"] - prev) / prev
        ok = rep["residual_on_Q"] <= tol and ta.get("ok", True) and drift <= drift_tol
        t.add(name, _fmt_res(r), rep["residual_on_Q"], rep["norm_eta"], rep["norm_omega"], rep["ratio"],
              ta.get("gamma_pattern", True), ta.get("trace_law", 0.0), ta.get("trace_law_tolerance", 0.0),
              ta.get("dbar_support_mass", 0.0), ta.get("theta_on_Q", 0.0), drift,
              ok=ok, label=f"{name}@{_fmt_res(r)}")
        prev = rep["norm_eta"]
    if field_out is not None:
        field_out.write_text(form_to_csv(eta, fmt=FMT), encoding="utf-8")
    if trace_out is not None:
        buf = io.StringIO()
        for kind, store in (("omega", tr.omega), ("eta", tr.eta), ("theta", tr.theta)):
            for j in sorted(store):
                if store[j] is None:
                    continue
                buf.write(f"# {kind}^{j}\n")
                form_to_csv(store[j], buf, fmt=FMT)
        trace_out.write_text(buf.getvalue(), encoding="utf-8")
    return t


NORM_CASES = {
    # case: (f, p, s, expected value or inf)
    "one_p2_s0": (lambda z: np.ones_like(z), "2", "0", float(np.sqrt(np.pi))),
    "inv_abs_p2_s0": (lambda z: 1 / np.abs(z), "2", "0", np.inf),
    "inv_abs_p2_sm1": (lambda z: 1 / np.abs(z), "2", "-1", float(np.sqrt(np.pi))),
    "one_pinf_s0": (lambda z: np.ones_like(z), "inf", "0", 1.0),
}


def run_norms(cfg: dict) -> Table:
    from .analysis import weighted_lp_norm_sweep

    res = _resolutions(cfg, [16, 32, 64, 128, 256])
    cases = cfg.get("cases", list(NORM_CASES))
    rtol = float(cfg.get("rtol", 1e-3))
    t = Table(["case", "source_norm", "target_norm", "ratio", "flags"])
    for c in cases:
        if c not in NORM_CASES:
            raise UsageError(f"cases: unknown norm case {c!r}")
        f, p, s, expected = NORM_CASES[c]
        sweep = weighted_lp_norm_sweep(f, Disc(), p, s, resolutions=res)
        last = sweep[-1]
        val = np.inf if last.diverging else last.value
        if np.isinf(expected):
            ok = bool(last.diverging or np.isinf(last.value))
            ratio = np.inf if ok else val / 1.0
        else:
            ok = bool(np.isfinite(val) and abs(val - expected) <= rtol * expected)
            ratio = val / expected
        t.add(c, val, expected, ratio, "diverging" if last.diverging else "", ok=ok, label=c)
    return t


def run_opnorm(cfg: dict, seed: int) -> Table:
    p = _exponent(cfg)
    s = _rational(cfg, "s", "0")
    mode = cfg.get("mode", "full")
    if mode not in ("full", "modified"):
        raise UsageError("mode: expected 'full' or 'modified'")
    eps = _rational(cfg, "epsilon", "1/10")
    res = _resolutions(cfg, [(32, 64), (64, 128)])
    drift_tol = float(cfg.get("drift", 0.10))
    fam = TestFamily(n_bumps=int(cfg.get("n_bumps", 20)), degree=int(cfg.get("degree", 2)), seed=seed,
                     include_zero=True)
    t = Table(["case", "source_norm", "target_norm", "ratio", "flags"])
    prev = None
    for r in res:
        out = operator_norm_sample(fam, p, s, mode=mode, epsilon=eps, resolution=r)
        for name, src, tgt, ratio in out["rows"]:
            t.add(f"{name}@{_fmt_res(r)}", src, tgt, ratio, "diverging" if not np.isfinite(ratio) else "",
                  ok=bool(np.isfinite(ratio)), label=f"{name}@{_fmt_res(r)}")
        mx = out["max_ratio"]
        drift = 0.0 if prev is None else abs(mx - prev) / prev
        flags = f"c={out['c']};target_s={out['target_s']};drift={FMT % drift}"
        t.add(f"max@{_fmt_res(r)}", "", "", mx, flags, ok=bool(np.isfinite(mx) and drift <= drift_tol),
              label=f"max@{_fmt_res(r)}")
        prev = mx
    return t


def run_witness(cfg: dict) -> Table:
    pairs = cfg.get("pairs", [list(x) for x in WITNESS_PAIRS])
    if not pairs:
        raise UsageError("pairs: empty list")
    t = Table(["case", "source_norm", "target_norm", "ratio", "flags"])
    for pv, sv in pairs:
        try:
            cases = witness_suite(str(pv), str(sv))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"pairs: {exc}") from None
        for c in cases:
            last = c.values[-1]
            flags = ";".join([f"expected={'member' if c.expected_member else 'excluded'}",
                              f"observed={'member' if c.member else 'excluded'}",
                              f"function={c.function}", f"space={c.weight}"])
            t.add(f"p={pv},s={sv}:{c.case}", c.values[0], last,
                  last / c.values[0] if c.values[0] else np.inf, flags, ok=c.ok,
                  label=f"p={pv},s={sv}:{c.case}")
    return t


def run_sweep(cfg: dict, seed: int) -> Table:
    """Operator-norm samples over a list of ``epsilon`` (full mode)."""
    eps_list = cfg.get("epsilons", ["1/2", "1/4", "1/10", "1/20"])
    if not eps_list:
        raise UsageError("epsilons: empty sweep")
    eps = _rational_list(eps_list, "epsilons")
    if any(not 0 < e < 1 for e in eps):
        raise UsageError("epsilons: values must lie in (0, 1)")
    p = _exponent(cfg)
    s = _rational(cfg, "s", "0")
    res = _resolution(cfg.get("resolution", "32,64"), "resolution")
    fam = TestFamily(n_bumps=int(cfg.get("n_bumps", 10)), degree=int(cfg.get("degree", 2)), seed=seed)
    t = Table(["epsilon", "target_s", "max_ratio", "monotone"])
    prev = None
    for e in sorted(eps, reverse=True):
        out = operator_norm_sample(fam, p, s, mode="full", epsilon=e, resolution=res)
        mx = out["max_ratio"]
        # a smaller epsilon means a stronger target norm, hence a larger ratio
        mono = prev is None or mx >= prev * (1 - 1e-12)
        t.add(str(e), str(out["target_s"]), mx, mono, ok=mono, label=f"epsilon={e}")
        prev = mx
    return t


# ---------------------------------------------------------------------------
# entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dolbeault-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML file with experiment settings")
        p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
        p.add_argument("--seed", type=int, default=None, help="seed for random test families")
        return p

    w = common(sub.add_parser("weights", help="dbar-weights against brute-force enumeration"))
    w.add_argument("--p", help="Lebesgue exponent, rational or inf")
    w.add_argument("--s", help="comma-separated rational weights")

    c = common(sub.add_parser("cauchy", help="weighted Cauchy area transform against a reference"))
    c.add_argument("--k", type=int)
    c.add_argument("--f", help="named test function u; the transform acts on du/dzbar")
    c.add_argument("--resolution", help="nr,nt")
    c.add_argument("--targets", help="file of target points, one 'x y' per line")

    h = common(sub.add_parser("homotopy", help="homotopy-formula residual versus resolution"))
    h.add_argument("--n", type=int)
    h.add_argument("--q", type=int)
    h.add_argument("--omega", action="append", help="named test form (repeatable)")
    h.add_argument("--resolution", action="append", help="one resolution per flag, increasing")

    s = common(sub.add_parser("solve", help="local weighted dbar solver with verification"))
    s.add_argument("--omega")
    s.add_argument("--n", type=int)
    s.add_argument("--field", type=Path, help="write eta at the finest resolution as CSV")
    s.add_argument("--trace", type=Path, help="write every intermediate form as CSV")
    s.add_argument("--resolution", action="append")

    common(sub.add_parser("norms", help="weighted norm closed-form cases"))
    o = common(sub.add_parser("opnorm", help="empirical operator-norm samples"))
    o.add_argument("--p")
    o.add_argument("--s")
    o.add_argument("--mode", choices=["full", "modified"])
    o.add_argument("--epsilon")
    common(sub.add_parser("witness", help="membership witnesses for each weight branch"))
    sw = common(sub.add_parser("sweep", help="operator-norm samples across epsilon"))
    sw.add_argument("--epsilons", help="comma-separated values in (0, 1)")
    return ap


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config: no such file {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config: {exc}") from None


def _overrides(args) -> dict:
    skip = {"command", "config", "out", "seed", "field", "trace"}
    out = {}
    for key, val in vars(args).items():
        if key in skip or val is None:
            continue
        if key == "resolution" and isinstance(val, list):
            out["resolutions"] = val
        elif key == "omega" and isinstance(val, list):
            out["omega"] = val
        elif key == "s" and args.command == "weights":
            out["s"] = val
        elif key == "epsilons":
            out["epsilons"] = [x for x in val.split(",") if x.strip()]
        else:
            out[key] = val
    return out


def _config_hash(command: str, cfg: dict, seed: int) -> str:
    blob = json.dumps({"command": command, "config": cfg, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def run(command: str, cfg: dict, seed: int = 0, field_out=None, trace_out=None) -> Table:
    if command == "weights":
        return run_weights(cfg)
    if command == "cauchy":
        return run_cauchy(cfg)
    if command == "homotopy":
        return run_homotopy(cfg)
    if command == "solve":
        return run_solve(cfg, field_out, trace_out)
    if command == "norms":
        return run_norms(cfg)
    if command == "opnorm":
        return run_opnorm(cfg, seed)
    if command == "witness":
        return run_witness(cfg)
    if command == "sweep":
        return run_sweep(cfg, seed)
    raise UsageError(f"unknown command {command!r}")


def render(table: Table, command: str, cfg: dict, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n# command={command}\n# config_sha256={_config_hash(command, cfg, seed)}\n"
              f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _load_config(args.config)
        cfg.update(_overrides(args))
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        if seed < 0 or seed >= 2**64:
            raise UsageError("seed: must be an unsigned 64-bit integer")
        table = run(args.command, cfg, seed, getattr(args, "field", None), getattr(args, "trace", None))
    except UsageError as exc:
        print(f"dolbeault-lab {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    text = render(table, args.command, cfg, seed)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8", newline="\n")
    print(f"# wall_time_s={time.perf_counter() - t0:.3f} rows={len(table.rows)} "
          f"failures={len(table.failures)}", file=sys.stderr)
    for label in table.failures:
        print(f"FAILED: {label}", file=sys.stderr)
    return 1 if table.failures else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
