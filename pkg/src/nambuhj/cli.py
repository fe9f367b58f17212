"""Command-line interface.

Configuration files are flat ``key = value`` documents::

    # canonical n=3 example
    n = 3
    hamiltonians = [x1, x3]
    rho_lambda = 1
    rho_box = 0
    params = [a=1.5]
    section = x1^2
    domain = [-1:1, -1:1, -1:1]

List values are bracketed and comma separated; items may be quoted.
Optional keys ``pde_coefficients`` and ``pde_source`` define a custom
quasi-linear PDE for ``characteristics`` in ``x1..xm`` and ``u``.

Exit code 2 marks a usage error; verification or domain failures exit with 1.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import brackets, fields, hj, riccati
from .errors import ConfigError, NambuError, ParseError
from .exprlang import ScalarField
from .flows import format_float, integrate
from .sampling import make_rng, random_points, random_polynomial
from .wedge import Subspace, annihilator, is_j_lagrangian

__all__ = ["SystemConfig", "load_config", "main"]

KEYS = ("n", "hamiltonians", "rho_lambda", "rho_box", "params", "section", "domain",
        "pde_coefficients", "pde_source")
AXIOM_TOL = 1e-8
VF_TOL = 1e-9
THEOREM_TOL = 1e-10


# -- configuration ----------------------------------------------------------

@dataclass
class SystemConfig:
    n: int
    hamiltonians: list
    rho_lambda: str = "1"
    rho_box: str = "1"
    params: dict = field(default_factory=dict)
    section: str | None = None
    domain: list | None = None
    pde_coefficients: list | None = None
    pde_source: str | None = None

    def system(self):
        return fields.HamiltonianSystem.from_expressions(
            self.hamiltonians, self.n, self.rho_lambda, self.rho_box, self.params)

    def section_obj(self):
        if self.section is None:
            raise ConfigError([(None, "this command needs a 'section' entry")])
        return hj.Section.parse(self.section, self.n, self.params)

    def box(self):
        return np.array(self.domain if self.domain else [(-1.0, 1.0)] * self.n, dtype=float)

    def pde(self):
        if self.pde_coefficients is None:
            return hj.assemble_hj_pde(self.system())
        return hj.QuasiLinearPde.from_expressions(self.pde_coefficients, self.pde_source, self.params)


def _split_list(text):
    """Split ``[a, b(c, d), "e,f"]`` at top-level commas."""
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError("expected a bracketed list")
    body = text[1:-1]
    items, buf, depth, quote = [], [], 0, None
    for ch in body:
        if quote:
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
            continue
        if ch in "\"'":
            quote = ch
        elif ch in "([":
            depth += 1
            buf.append(ch)
        elif ch in ")]":
            depth -= 1
            buf.append(ch)
        elif ch == "," and depth == 0:
            items.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    if quote:
        raise ValueError("unterminated quote")
    if depth != 0:
        raise ValueError("unbalanced brackets")
    last = "".join(buf).strip()
    if last or items:
        items.append(last)
    if any(not it for it in items):
        raise ValueError("empty list item")
    return items


def _unquote(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def load_config(source):
    """Parse and validate a configuration from a path or from inline text.

    Every problem found is collected and raised together as ConfigError.
    """
    if isinstance(source, Path) or ("\n" not in str(source) and "=" not in str(source)):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError([(None, f"cannot read {source}: {exc.strerror or exc}")]) from None
    else:
        text = str(source)

    problems = []
    raw, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            problems.append((lineno, f"expected 'key = value', got {s!r}"))
            continue
        key, value = (t.strip() for t in s.split("=", 1))
        if key not in KEYS:
            problems.append((lineno, f"unknown key {key!r}"))
            continue
        if key in raw:
            problems.append((lineno, f"duplicate key {key!r}"))
            continue
        raw[key], where[key] = value, lineno

    def listed(key):
        try:
            return [_unquote(v) for v in _split_list(raw[key])]
        except ValueError as exc:
            problems.append((where[key], f"{key}: {exc}"))
            return None

    n = None
    if "n" not in raw:
        problems.append((None, "missing key 'n'"))
    else:
        try:
            n = int(raw["n"])
            if n < 3:
                problems.append((where["n"], f"n must be at least 3, got {n}"))
                n = None
        except ValueError:
            problems.append((where["n"], f"n must be an integer, got {raw['n']!r}"))

    params = {}
    if "params" in raw:
        for item in listed("params") or []:
            name, sep, val = item.partition("=")
            name = name.strip()
            try:
                if not sep or not name.isidentifier():
                    raise ValueError
                params[name] = float(val)
            except ValueError:
                problems.append((where["params"], f"bad parameter binding {item!r}"))

    hams = None
    if "hamiltonians" not in raw:
        problems.append((None, "missing key 'hamiltonians'"))
    else:
        hams = listed("hamiltonians")
        if hams is not None and n is not None and len(hams) != n - 1:
            problems.append((where["hamiltonians"],
                             f"arity: n = {n} needs {n - 1} Hamiltonians, got {len(hams)}"))

    rho_lambda = _unquote(raw.get("rho_lambda", "1"))
    rho_box = _unquote(raw.get("rho_box", "1"))
    section = _unquote(raw["section"]) if "section" in raw else None

    domain = None
    if "domain" in raw:
        items = listed("domain")
        if items is not None:
            domain = []
            for it in items:
                lo, sep, hi = it.partition(":")
                try:
                    if not sep or not float(lo) < float(hi):
                        raise ValueError
                    domain.append((float(lo), float(hi)))
                except ValueError:
                    problems.append((where["domain"], f"bad interval {it!r}; use lo:hi with lo < hi"))
            if n is not None and len(domain) != n:
                problems.append((where["domain"], f"domain needs {n} intervals, got {len(domain)}"))

    pde_coefficients = listed("pde_coefficients") if "pde_coefficients" in raw else None
    pde_source = _unquote(raw["pde_source"]) if "pde_source" in raw else None
    if (pde_coefficients is None) != (pde_source is None):
        problems.append((None, "pde_coefficients and pde_source must be given together"))

    if n is not None:
        def check(key, expr, dim, names=params):
            try:
                ScalarField.parse(expr, dim, names)
            except ParseError as exc:
                problems.append((where.get(key), f"{key}: {exc}"))

        for h in hams or []:
            check("hamiltonians", h, n)
        check("rho_lambda", rho_lambda, n)
        check("rho_box", rho_box, n)
        if section is not None:
            check("section", section, n - 1)
        if pde_coefficients is not None:
            if len(pde_coefficients) != n - 1:
                problems.append((where["pde_coefficients"], f"need {n - 1} PDE coefficients"))
            with_u = dict(params, u=0.0)
            for c in pde_coefficients:
                check("pde_coefficients", c, len(pde_coefficients), with_u)
            if pde_source is not None:
                check("pde_source", pde_source, len(pde_coefficients), with_u)

    if problems:
        raise ConfigError(sorted(problems, key=lambda p: (p[0] is None, p[0] or 0)))
    return SystemConfig(n, hams, rho_lambda, rho_box, params, section, domain, pde_coefficients, pde_source)


# -- helpers ------------------------------------------------------------------

def _floats(text, what, count=None):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what}: expected comma-separated numbers") from None
    if count is not None and len(vals) != count:
        raise NambuError(f"{what} needs {count} values, got {len(vals)}")
    return np.array(vals)


def _finite(obj):
    # strict JSON has no NaN or infinity; they become null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(obj):
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_rows(path):
    """Numeric CSV rows; a non-numeric first line is taken as a header."""
    rows = []
    first = True
    for line in Path(path).read_text().splitlines():
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        try:
            rows.append([float(v) for v in s.split(",")])
        except ValueError:
            if not first:
                raise NambuError(f"{path}: non-numeric row {s!r}") from None
        first = False
    return rows


# -- subcommands --------------------------------------------------------------

def cmd_check(args):
    cfg = load_config(args.config)
    sys_ = cfg.system()
    S = sys_.structure
    n = cfg.n
    rng = make_rng(args.seed)
    pts = random_points(rng, cfg.box(), args.points)
    worst = {"skew": 0.0, "leibniz": 0.0, "fundamental_identity": 0.0,
             "vf_composed": 0.0, "vf_brackets": 0.0}
    perms = brackets.all_permutations(n)
    for x in pts:
        fs = [random_polynomial(rng, n) for _ in range(n + 1)]
        perm = perms[int(rng.integers(len(perms)))]
        worst["skew"] = max(worst["skew"], brackets.skew_residual(S, fs[:n], x, perm).relative)
        worst["leibniz"] = max(worst["leibniz"],
                               brackets.leibniz_residual(S, fs[0], fs[1], fs[2:], x).relative)
        r = brackets.fundamental_identity_residual(S, list(sys_.hamiltonians), fs[:n], x)
        worst["fundamental_identity"] = max(worst["fundamental_identity"], r.relative)
        X = fields.ham_vf(sys_, x)
        scale = max(1.0, float(np.max(np.abs(X))))
        worst["vf_composed"] = max(worst["vf_composed"],
                                   float(np.max(np.abs(X - fields.ham_vf_composed(sys_, x)))) / scale)
        worst["vf_brackets"] = max(worst["vf_brackets"],
                                   float(np.max(np.abs(X - fields.vf_from_brackets(sys_, x)))) / scale)
    tols = {k: (VF_TOL if k.startswith("vf") else AXIOM_TOL) for k in worst}
    report = {
        "points": args.points,
        "seed": args.seed,
        "checks": {k: {"max_relative": worst[k], "tol": tols[k], "ok": bool(worst[k] < tols[k])} for k in worst},
    }
    report["ok"] = all(c["ok"] for c in report["checks"].values())
    _emit(_dump(report), args.out)
    return 0 if report["ok"] else 1


def cmd_vf(args):
    cfg = load_config(args.config)
    x = _floats(args.at, "--at", cfg.n)
    X = fields.ham_vf(cfg.system(), x)
    _emit(_dump({"point": x.tolist(), "field": X.tolist()}), args.out)
    return 0


def cmd_flow(args):
    cfg = load_config(args.config)
    sys_ = cfg.system()
    x0 = _floats(args.start, "--from", cfg.n)
    traj = integrate(lambda y: fields.ham_vf(sys_, y), x0, args.t0, args.t1, args.h)
    _emit(traj.to_csv(), args.out)
    return 0


def _grid(text, m):
    axes = []
    for part in text.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise NambuError(f"grid axis {part!r}: use lo:hi:count")
        lo, hi, cnt = float(bits[0]), float(bits[1]), int(bits[2])
        if cnt < 1:
            raise NambuError("grid counts must be positive")
        axes.append(np.linspace(lo, hi, cnt))
    if len(axes) != m:
        raise NambuError(f"grid needs {m} axes, got {len(axes)}")
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def cmd_hj(args):
    cfg = load_config(args.config)
    sys_ = cfg.system()
    sec = cfg.section_obj()
    s = hj.theorem_sign()
    m = cfg.n - 1
    lines = [",".join([*(f"x{i + 1}" for i in range(m)), "hj_residual", "relatedness_n", "mismatch"])]
    ok = True
    worst = 0.0
    for xN in _grid(args.grid, m):
        r = hj.hj_residual(sys_, sec, xN)
        rel = hj.relatedness_residual(sys_, sec, xN)[-1]
        mismatch = abs(r.value - s * rel)
        ok = ok and bool(mismatch <= THEOREM_TOL * r.scale)
        worst = max(worst, abs(r.value))
        lines.append(",".join([*(format_float(v) for v in xN), format_float(r.value),
                               format_float(rel), format_float(mismatch)]))
    _emit("\n".join(lines) + "\n", args.out)
    print(_dump({"theorem_equivalence": ok, "max_abs_hj_residual": worst}), end="", file=sys.stderr)
    return 0 if ok else 1


def cmd_characteristics(args):
    cfg = load_config(args.config)
    pde = cfg.pde()
    rows = _read_rows(args.initial)
    if not rows:
        raise NambuError(f"{args.initial}: no initial data")
    initial = []
    for r in rows:
        if len(r) != pde.m + 1:
            raise NambuError(f"initial rows need {pde.m} coordinates plus u, got {len(r)} values")
        initial.append((r[:-1], r[-1]))
    cloud = hj.solve_characteristics(pde, initial, args.tmax, args.h)
    _emit(cloud.to_csv(), args.out)
    stats = hj.estimate_cloud_residual(cloud, pde, n_neighbors=args.neighbors, degree=args.degree).as_dict()
    stats["flags"] = {str(k): v for k, v in cloud.flags.items()}
    text = _dump(stats)
    if args.stats:
        Path(args.stats).write_text(text)
    else:
        sys.stderr.write(text)
    if args.max_residual is not None and not stats["max"] <= args.max_residual:
        return 1
    return 0


def cmd_lagrangian(args):
    rows = _read_rows(args.basis)
    if not rows:
        raise NambuError(f"{args.basis}: empty basis")
    V = Subspace(np.array(rows))
    if args.config:
        cfg = load_config(args.config)
        S = cfg.system().structure
        at = _floats(args.at, "--at", cfg.n) if args.at else cfg.box().mean(axis=1)
    else:
        S = brackets.VnjStructure.canonical(V.n)
        at = _floats(args.at, "--at", V.n) if args.at else np.zeros(V.n)
    if S.n != V.n:
        raise NambuError(f"basis vectors have length {V.n}, structure has n = {S.n}")
    verdict = is_j_lagrangian(S, V, args.j, at)
    _emit(_dump({"dim": V.dim, "j": args.j, "annihilator_dim": len(annihilator(V, args.j)),
                 "lagrangian": bool(verdict)}), args.out)
    return 0 if verdict else 1


def _riccati_params(args):
    if args.family:
        if args.b1 is None:
            raise NambuError("--family needs --b1")
        p = riccati.RiccatiParams.family(args.b1)
        for name in ("a0", "a1", "a2"):
            given = getattr(args, name)
            if given is not None and given != getattr(p, name):
                raise argparse.ArgumentTypeError(f"--{name} contradicts --family")
        return p
    return riccati.RiccatiParams(*(getattr(args, k) or 0.0 for k in ("a0", "a1", "a2", "b1")))


def cmd_riccati(args):
    p = _riccati_params(args)
    indices = tuple(int(v) for v in args.indices.split(","))
    rng = make_rng(args.seed)
    pts = riccati.sample_domain(rng, args.points)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    pairs = {}
    for l in indices:
        for j in range(1, 5):
            if j == l:
                continue
            reps = [riccati.verify_factorization(l, j, x, p) for x in pts]
            pairs[f"{l},{j}"] = {
                "orientation": reps[0]["orientation"],
                "ratio_min": min(r["ratio"] for r in reps),
                "ratio_max": max(r["ratio"] for r in reps),
                "agrees": all(r["agrees"] for r in reps),
                "signed_agrees": all(r["signed_agrees"] for r in reps),
            }
    factorization = {"params": vars(p), "on_family": p.on_family, "pairs": pairs,
                     "literal_agreement": all(v["agrees"] for v in pairs.values()),
                     "signed_agreement": all(v["signed_agrees"] for v in pairs.values())}
    spread = riccati.conformal_spread(p, pts, indices)
    consistency = {"spread": spread, "tol": 1e-9, "ok": bool(spread < 1e-9)}
    summary = {"factorization": factorization, "consistency": consistency}

    ok = factorization["signed_agreement"] and consistency["ok"]
    if p.on_family or args.force:
        sys_ = riccati.riccati_system(p, indices, points=pts, force=args.force)
        dyn = 0.0
        for x in pts:
            lam, _ = fields.ham_vf_parts(sys_, x)
            rhs = riccati.riccati_rhs(x, p)
            dyn = max(dyn, float(np.max(np.abs(lam - rhs)) / max(1.0, float(np.max(np.abs(rhs))))))
        summary["dynamics"] = {"max_relative": dyn, "tol": 1e-9, "ok": bool(dyn < 1e-9)}
        ok = ok and dyn < 1e-9

        x0 = pts[0]
        a = integrate(lambda y: riccati.riccati_rhs(y, p), x0, 0.0, args.t1, args.h)
        b = integrate(lambda y: fields.ham_vf_parts(sys_, y)[0], x0, 0.0, args.t1, args.h)
        summary["trajectory"] = {"start": x0.tolist(), "t1": args.t1,
                                 "max_abs_difference": float(np.max(np.abs(a.states - b.states)))}
        if out_dir:
            (out_dir / "trajectory.csv").write_text(b.to_csv())

        pde = hj.assemble_hj_pde(sys_)
        base = np.array([-1.0, 0.0, 0.7])
        sp = args.spacing
        seeds = [(base + np.array([0.0, a_ * sp, b_ * sp]), args.u0)
                 for a_ in range(args.patch) for b_ in range(args.patch)]
        A = pde(base, args.u0)[0]
        h = sp / (2.0 * float(np.max(np.abs(A))))
        cloud = hj.solve_characteristics(pde, seeds, 5 * h, h)
        stats = hj.estimate_cloud_residual(cloud, pde).as_dict()
        stats["spacing"] = sp
        summary["characteristics"] = stats
        if out_dir:
            (out_dir / "cloud.csv").write_text(cloud.to_csv())
    else:
        summary["dynamics"] = {"skipped": "parameters are off the family; pass --force"}

    summary["ok"] = bool(ok)
    if out_dir:
        (out_dir / "factorization.json").write_text(_dump(factorization))
        (out_dir / "consistency.json").write_text(_dump(consistency))
    sys.stdout.write(_dump(summary))
    return 0 if ok else 1


# -- entry point --------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="nambuhj", description="Nambu-Jacobi brackets and Hamilton-Jacobi tools")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="system configuration file")
        p.add_argument("--out", help="write output here instead of stdout")
        return p

    p = with_config(sub.add_parser("check", help="run bracket and vector-field invariant suites"))
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = with_config(sub.add_parser("vf", help="evaluate the Hamiltonian vector field"))
    p.add_argument("--at", required=True, help="x1,...,xn")
    p.set_defaults(func=cmd_vf)

    p = with_config(sub.add_parser("flow", help="integrate the Hamiltonian flow"))
    p.add_argument("--from", dest="start", required=True, help="x1,...,xn")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-3)
    p.set_defaults(func=cmd_flow)

    p = with_config(sub.add_parser("hj", help="HJ and relatedness residuals on a grid"))
    p.add_argument("--grid", required=True, help="lo:hi:count per base coordinate, comma separated")
    p.set_defaults(func=cmd_hj)

    p = with_config(sub.add_parser("characteristics", help="solve the HJ equation by characteristics"))
    p.add_argument("--initial", required=True, help="CSV rows x1,...,x(n-1),u")
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-2)
    p.add_argument("--stats", help="write residual statistics JSON here (default stderr)")
    p.add_argument("--neighbors", type=int, default=None)
    p.add_argument("--degree", type=int, choices=(1, 2), default=1)
    p.add_argument("--max-residual", type=float, default=None, help="exit 1 above this cloud residual")
    p.set_defaults(func=cmd_characteristics)

    p = sub.add_parser("lagrangian", help="test whether a subspace is j-Lagrangian")
    p.add_argument("--basis", required=True, help="file with one basis vector per line")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--config", help="structure to use (default canonical)")
    p.add_argument("--at", help="point of evaluation")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lagrangian)

    p = sub.add_parser("riccati", help="coupled Riccati demonstration")
    for name in ("a0", "a1", "a2", "b1"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--family", action="store_true", help="use a1=0, a2=-1, a0=-b1")
    p.add_argument("--force", action="store_true", help="install the conformal factor off the family")
    p.add_argument("--indices", default="2,3,4")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t1", type=float, default=0.1)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--spacing", type=float, default=2e-5)
    p.add_argument("--patch", type=int, default=6)
    p.add_argument("--u0", type=float, default=1.5)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_riccati)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        ap.print_usage(sys.stderr)
        print(f"nambuhj: error: {exc}", file=sys.stderr)
        return 2
    except (NambuError, ValueError, ArithmeticError, OSError) as exc:
        print(f"nambuhj: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
