"""Command-line frontend.

    mvtransfer gfactors --kmax 4
    mvtransfer univariate --alpha 0.5 --n 100 --order 2
    mvtransfer borel --config run.json
    mvtransfer verify --suite default --out results/

CSV goes to stdout (or --out); a short human summary goes to stderr.
Exit codes: 0 success, 1 validation or verification failure, 2 numerical
non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import jsonschema
import numpy as np

from .borel_laplace import TruncationPoint, borel, laplace_truncated, roundtrip_borel_of_laplace
from .contour import ContourSpec, QuadratureError
from .core import ExponentData, HomogeneousTerm, SingularExpansion, check_homogeneity, zero_avoidance_scan
from .expr import ParseError, parse_expression
from .special import build_g_table, exact_power_coefficient
from .transfer import POLICIES, predict, predict_univariate
from .verify import CaseSpec, default_cases, stretched_diagonal_suite

_NUM = {"type": "number"}
_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_POINT = {"type": "array", "items": _COMPLEX, "minItems": 1}
_POINTS = {"type": "array", "items": _POINT, "minItems": 1}
_EXPR = {"type": "string", "minLength": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_TERM = _obj({"expr": _EXPR, "theta0": _NUM, "coefficient": _COMPLEX}, ("expr", "theta0"))

CONFIG_SCHEMA = _obj({
    "d": {"type": "integer", "minimum": 1},
    "seed": {"type": "integer", "minimum": 0},
    "contour": _obj({
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "deltaPrime": {"type": "number", "exclusiveMinimum": 0},
        "arcRadius": {"type": "number", "exclusiveMinimum": 0},
        "truncationRadius": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "auto"}]},
        "tol": {"type": "number", "exclusiveMinimum": 0},
    }),
    "gauge": _obj({
        "policy": {"enum": list(POLICIES)},
        "lambdaBox": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2, "maxItems": 2},
    }),
    "tolerance": _obj({
        "quadrature": {"type": "number", "exclusiveMinimum": 0},
        "homogeneity": {"type": "number", "exclusiveMinimum": 0},
        "samples": {"type": "integer", "minimum": 1},
    }),
    "borel": _obj({"H": _EXPR, "lambda": _POINTS}, ("H", "lambda")),
    "laplace": _obj({"I": _EXPR, "u": _POINTS, "c": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                     "delta": {"type": "number", "exclusiveMinimum": 0}}, ("I", "u", "c")),
    "roundtrip": _obj({"I": _EXPR, "lambda": _POINTS, "c": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}},
                      ("I", "lambda", "c")),
    "predict": _obj({
        "terms": {"type": "array", "items": _TERM, "minItems": 0},
        "theta": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "regularPart": _EXPR,
        "remainderTheta0": _NUM,
        "n": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}, "minItems": 1},
        "order": {"type": "number", "minimum": 0},
    }, ("terms", "theta", "n")),
    "verify": _obj({
        "suite": {"enum": ["default", "none"]},
        "cases": {"type": "array", "items": _obj({
            "name": {"type": "string"},
            "A": _EXPR,
            "terms": {"type": "array", "items": _TERM, "minItems": 1},
            "theta": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            "lambda": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            "n0": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            "indices": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 1}}},
            "orders": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "expectedSlope": {"type": "array", "items": _NUM},
            "slopeTol": {"type": "number", "exclusiveMinimum": 0},
            "which": {"enum": ["abs", "rel"]},
            "maxFinalRel": {"type": "number", "exclusiveMinimum": 0},
        }, ("name", "A", "terms", "theta"))},
    }),
})


class ConfigError(ValueError):
    pass


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_config(cfg: dict) -> dict:
    """Schema check plus cross-field checks; raises ConfigError with a JSON pointer."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"config error at {_pointer(e.absolute_path)}: {e.message}")
    d = cfg.get("d", 1)
    for block, key in (("borel", "lambda"), ("laplace", "u"), ("roundtrip", "lambda")):
        for i, p in enumerate(cfg.get(block, {}).get(key, [])):
            if len(p) != d:
                raise ConfigError(f"config error at /{block}/{key}/{i}: expected {d} entries, got {len(p)}")
    for block, key in (("laplace", "c"), ("roundtrip", "c")):
        c = cfg.get(block, {}).get(key)
        if c is not None and len(c) not in (1, d):
            raise ConfigError(f"config error at /{block}/{key}: expected 1 or {d} entries")
    pr = cfg.get("predict")
    if pr:
        if len(pr["theta"]) != d:
            raise ConfigError(f"config error at /predict/theta: expected {d} entries")
        for i, n in enumerate(pr["n"]):
            if len(n) != d:
                raise ConfigError(f"config error at /predict/n/{i}: expected {d} entries")
    try:
        _contour(cfg)
    except ValueError as exc:
        raise ConfigError(f"config error at /contour: {exc}") from None
    for block, key in (("borel", "H"), ("laplace", "I"), ("roundtrip", "I")):
        if block in cfg:
            _parse(cfg[block][key], d, f"/{block}/{key}")
    if pr:
        for i, t in enumerate(pr["terms"]):
            _parse(t["expr"], d, f"/predict/terms/{i}/expr")
        if "regularPart" in pr:
            _parse(pr["regularPart"], d, "/predict/regularPart")
    return cfg


def _parse(text, d, where):
    try:
        return parse_expression(text, d)
    except ParseError as exc:
        raise ConfigError(f"config error at {where}: {exc}") from None


def _cplx(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _contour(cfg) -> ContourSpec:
    c = dict(cfg.get("contour", {}))
    if c.get("truncationRadius") == "auto":
        c["truncationRadius"] = None
    tol = cfg.get("tolerance", {}).get("quadrature")
    if tol is not None and "tol" not in c:
        c["tol"] = tol
    return ContourSpec(**c)


def _digest(cfg) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "{:.17g}".format(float(x))


class _Output:
    def __init__(self, command: str, cfg: dict, path: str | None):
        self.buf = io.StringIO()
        self.path = path
        self.buf.write(f"# mvtransfer {command} config-sha256={_digest(cfg)}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def header(self, cols):
        self.writer.writerow(cols)

    def row(self, values):
        self.writer.writerow([_fmt(v) for v in values])

    def close(self):
        text = self.buf.getvalue()
        if self.path:
            with open(self.path, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _point_cols(prefix, d):
    cols = []
    for j in range(1, d + 1):
        cols += [f"{prefix}{j}_re", f"{prefix}{j}_im"]
    return cols


def _point_vals(p):
    out = []
    for z in p:
        out += [z.real, z.imag]
    return out


def cmd_gfactors(args, cfg):
    g = build_g_table(args.kmax)
    out = _Output("gfactors", cfg, args.out)
    out.header(["k", "l", "g"])
    for k, l, v in g.rows():
        out.row([k, l, float(v)])
    out.close()
    print(f"g-factor table up to k={args.kmax}: {sum(1 for _ in g.rows())} entries", file=sys.stderr)
    return 0


def cmd_univariate(args, cfg):
    g = build_g_table(max(args.order, 8))
    pred = predict_univariate(args.alpha, args.n, args.order, g).real
    exact = exact_power_coefficient(args.alpha, args.n)
    rel = abs(pred - exact) / max(abs(exact), 1e-30)
    out = _Output("univariate", cfg, args.out)
    out.header(["alpha", "n", "order", "predicted", "exact", "relErr"])
    out.row([args.alpha, args.n, args.order, pred, exact, rel])
    out.close()
    print(f"[z^{args.n}](1-z)^{args.alpha}: predicted {pred:.6e}, exact {exact:.6e}, relErr {rel:.3e}", file=sys.stderr)
    return 0


def cmd_borel(args, cfg):
    d, spec = cfg.get("d", 1), _contour(cfg)
    H = parse_expression(cfg["borel"]["H"], d)
    out = _Output("borel", cfg, args.out)
    out.header(_point_cols("lambda", d) + ["value_re", "value_im", "error"])
    for p in cfg["borel"]["lambda"]:
        lam = [_cplx(x) for x in p]
        r = borel(H, lam, spec)
        out.row(_point_vals(lam) + [r.value.real, r.value.imag, r.error])
    out.close()
    print(f"borel: {len(cfg['borel']['lambda'])} point(s)", file=sys.stderr)
    return 0


def cmd_laplace(args, cfg):
    d = cfg.get("d", 1)
    block = cfg["laplace"]
    tol = cfg.get("tolerance", {}).get("quadrature", 1e-10)
    I = parse_expression(block["I"], d)
    c = block["c"] * d if len(block["c"]) == 1 else block["c"]
    out = _Output("laplace", cfg, args.out)
    out.header(_point_cols("u", d) + ["value_re", "value_im", "error"])
    for p in block["u"]:
        u = [_cplx(x) for x in p]
        r = laplace_truncated(I, u, TruncationPoint(c), tol, block.get("delta"))
        out.row(_point_vals(u) + [r.value.real, r.value.imag, r.error])
    out.close()
    print(f"laplace: {len(block['u'])} point(s)", file=sys.stderr)
    return 0


def cmd_roundtrip(args, cfg):
    d, spec = cfg.get("d", 1), _contour(cfg)
    block = cfg["roundtrip"]
    I = parse_expression(block["I"], d)
    c = block["c"] * d if len(block["c"]) == 1 else block["c"]
    out = _Output("roundtrip", cfg, args.out)
    out.header(_point_cols("lambda", d) + ["value_re", "value_im", "expected_re", "expected_im", "residual", "error"])
    worst = 0.0
    for p in block["lambda"]:
        lam = [_cplx(x) for x in p]
        r = roundtrip_borel_of_laplace(I, lam, c, spec, spec.tol)
        worst = max(worst, r.relative_residual)
        out.row(_point_vals(lam) + [r.value.real, r.value.imag, r.expected.real, r.expected.imag, r.residual, r.error])
    out.close()
    print(f"roundtrip: worst relative residual {worst:.3e}", file=sys.stderr)
    return 0


def _expansion_from(cfg) -> SingularExpansion:
    d = cfg.get("d", 1)
    pr = cfg["predict"]
    theta = tuple(pr["theta"])
    terms = tuple(HomogeneousTerm(parse_expression(t["expr"], d), ExponentData(t["theta0"], theta),
                                  _cplx(t.get("coefficient", 1.0)), t["expr"]) for t in pr["terms"])
    reg = parse_expression(pr["regularPart"], d) if "regularPart" in pr else None
    return SingularExpansion(terms, theta, reg, pr.get("remainderTheta0"))


def cmd_predict(args, cfg):
    d, spec = cfg.get("d", 1), _contour(cfg)
    pr = cfg["predict"]
    expansion = _expansion_from(cfg)
    tolcfg = cfg.get("tolerance", {})
    for i, t in enumerate(expansion.terms):
        hc = check_homogeneity(t, samples=tolcfg.get("samples", 64), tol=tolcfg.get("homogeneity", 1e-10),
                               seed=cfg.get("seed", 0), delta=spec.delta)
        if not hc.passed:
            raise ValueError(f"term {i} fails the homogeneity check: {'; '.join(hc.diagnostics)}")
        za = zero_avoidance_scan(t.expr, spec.delta, seed=cfg.get("seed", 0), d=d)
        if not za.passed:
            print(f"warning: term {i}: {'; '.join(za.diagnostics)}", file=sys.stderr)
    policy = cfg.get("gauge", {}).get("policy", "first-coordinate")
    out = _Output("predict", cfg, args.out)
    out.header([f"n{j}" for j in range(1, d + 1)] + ["n0", "term"] + [f"k{j}" for j in range(1, d + 1)]
               + ["exponent", "value_re", "value_im", "contribution_re", "contribution_im"])
    for n in pr["n"]:
        rep = predict(expansion, n, expansion.theta, pr.get("order"), policy, spec, seed=cfg.get("seed", 0))
        for t in rep.terms:
            contrib = t.value * rep.gauge.n0 ** (-t.big_theta - t.exponent)
            out.row(list(n) + [rep.gauge.n0, str(t.term_index)] + list(t.k)
                    + [t.exponent, t.value.real, t.value.imag, contrib.real, contrib.imag])
        out.row(list(n) + [rep.gauge.n0, "total"] + [""] * d + ["", "", "", rep.value.real, rep.value.imag])
        for msg in rep.diagnostics:
            print(f"n={tuple(n)}: {msg}", file=sys.stderr)
    out.close()
    return 0


def _case_from(c) -> CaseSpec:
    return CaseSpec(
        c["name"], c["A"], tuple((t["expr"], t["theta0"]) for t in c["terms"]), tuple(c["theta"]),
        tuple(c.get("n0", ())), tuple(c["lambda"]) if "lambda" in c else None,
        tuple(tuple(n) for n in c["indices"]) if "indices" in c else None,
        tuple(c.get("orders", [min(c["theta"])])),
        tuple(c["expectedSlope"]) if "expectedSlope" in c else None,
        c.get("slopeTol", 0.3), c.get("which", "abs"), c.get("maxFinalRel"))


def cmd_verify(args, cfg):
    block = cfg.get("verify", {})
    suite = args.suite or block.get("suite", "default")
    cases = default_cases() if suite == "default" else []
    cases += [_case_from(c) for c in block.get("cases", [])]
    spec = _contour(cfg) if "contour" in cfg else None
    report = stretched_diagonal_suite(cases, spec, policy=cfg.get("gauge", {}).get("policy", "first-coordinate"),
                                      seed=cfg.get("seed", 0))
    outdir = args.out
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        for c in report.cases:
            suffix = "" if c.order is None else f"-N{_fmt(c.order)}"
            o = _Output("verify", cfg, os.path.join(outdir, f"{c.name}{suffix}.csv"))
            d = len(c.rows[0].n) if c.rows else 1
            o.header([f"n{j}" for j in range(1, d + 1)] + ["n0", "exact_re", "exact_im", "predicted_re",
                                                            "predicted_im", "absErr", "relErr"])
            for r in c.rows:
                o.row(list(r.n) + [r.n0, r.exact.real, r.exact.imag, r.predicted.real, r.predicted.imag,
                                   r.absErr, r.relErr])
            o.close()
    summary = _Output("verify", cfg, os.path.join(outdir, "summary.csv") if outdir else None)
    summary.header(["case", "Theta", "order", "slope", "expected_slope", "result", "detail"])
    for row in report.summary_rows():
        summary.row(list(row))
    summary.close()
    for c in report.cases:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name} (N={c.order}): {c.detail}", file=sys.stderr)
    return 0 if report.passed else 1


COMMANDS = {
    "gfactors": cmd_gfactors, "univariate": cmd_univariate, "borel": cmd_borel, "laplace": cmd_laplace,
    "roundtrip": cmd_roundtrip, "predict": cmd_predict, "verify": cmd_verify,
}
NEEDS_CONFIG = {"borel", "laplace", "roundtrip", "predict"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvtransfer", description="Multivariate coefficient asymptotics engine")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output CSV file (a directory for verify)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    sub = p.add_subparsers(dest="command", required=True)
    g = sub.add_parser("gfactors", parents=[common], help="dump the g-factor table")
    g.add_argument("--kmax", type=int, default=8)
    u = sub.add_parser("univariate", parents=[common], help="univariate prediction against the exact coefficient")
    u.add_argument("--alpha", type=float, required=True)
    u.add_argument("--n", type=int, required=True)
    u.add_argument("--order", type=int, default=0)
    for name in ("borel", "laplace", "roundtrip", "predict"):
        sub.add_parser(name, parents=[common], help=f"{name} from a config file")
    v = sub.add_parser("verify", parents=[common], help="run the verification suite")
    v.add_argument("--suite", choices=["default", "none"], default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = {}
        if args.config:
            with open(args.config) as fh:
                try:
                    cfg = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"config is not valid JSON: {exc}") from None
        elif args.command in NEEDS_CONFIG:
            raise ConfigError(f"{args.command} needs --config")
        validate_config(cfg)
        if args.command in NEEDS_CONFIG and args.command not in cfg:
            raise ConfigError(f"config error at /: missing block '{args.command}'")
        if args.command == "gfactors" and args.kmax < 0:
            raise ConfigError("--kmax must be >= 0")
        if args.command == "univariate" and (args.n < 0 or args.order < 0):
            raise ConfigError("--n and --order must be >= 0")
        # record the effective invocation in the digest
        cfg = dict(cfg, _argv=[a for a in vars(args).items() if a[0] not in ("out", "config", "threads")])
        return COMMANDS[args.command](args, cfg)
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
