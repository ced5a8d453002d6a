"""Command-line front end.

Exit codes: 0 all checks pass, 1 failed check or refusal, 2 unreadable
input, 3 violated precondition.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field

from .algebra import ParseError, RationalComplex, Truncation
from .birkhoff import extend_to_pure_tl
from .connection import ConnectionStructure, extract_higgs, flatness_residuals, pure_tl_check
from .construct import PrimitiveChoice, PureStructure, build_flat_f
from .errors import PreconditionError, TepkitError
from .fmanifold import (FManifoldModel, bracket_closure, euler_residual, example214_ideal, example214_radical,
                        integrability_residual, make_builtin, poisson, reduce_mod_linear, tensor_checks,
                        verify_algebra, CotangentPoly)
from .i2m import I2mNormalForm, default_truncation, exponents, flat_model, make_normal_form, normalize, seminormalize_T, tep_extend
from .report import Check, Report

COMMANDS = ("verify", "bracket-check", "normalize-i2m", "seminormalize", "exponents", "tep", "extend", "construct",
            "flat-model")
BUILTINS = ("i2m-normal", "example214", "I2", "A1n", "N2")


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    builtin: str | None = None
    z_max: int | None = None
    t_deg: int | None = None
    json: bool = False
    params: dict = field(default_factory=dict)


@dataclass
class Outcome:
    status: int
    report: Report
    data: dict
    message: str = ""


def _rational(text: str) -> RationalComplex:
    # accept the juxtaposed forms "1/2+1/3 i" and "1/3i" alongside "1/3*i"
    text = re.sub(r"(\d)\s*i\b", r"\1*i", text)
    try:
        return RationalComplex.parse(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"not an exact number: {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tepkit", description="Exact checks for (T)/(TE)/(TP)/(TEP)-structures.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", help="connection.json or fmanifold.json")
    p.add_argument("--builtin", choices=BUILTINS)
    p.add_argument("--z-order", type=int, dest="z_max", help="highest z-power kept")
    p.add_argument("--t-degree", type=int, dest="t_deg", help="highest total t-degree kept")
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int, help="dimension for A1n")
    p.add_argument("--g", default="t2^2", help="Euler coefficient g(t2) for N2")
    p.add_argument("--alpha", default="0")
    p.add_argument("--lambda", dest="lam", default="0")
    p.add_argument("--w", type=int)
    p.add_argument("--omega", help="primitive section as comma-separated coefficients, e.g. 1,0")
    p.add_argument("--require-euler", action="store_true")
    p.add_argument("--require-metric", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {"m": ns.m, "n": ns.n, "g": ns.g, "alpha": _rational(ns.alpha), "lambda": _rational(ns.lam),
              "w": ns.w, "omega": ns.omega, "require_euler": ns.require_euler, "require_metric": ns.require_metric}
    return RunConfig(ns.command, ns.input, ns.builtin, ns.z_max, ns.t_deg, ns.json, params)


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e.msg} (line {e.lineno})") from None


def _override(tr: Truncation, cfg: RunConfig) -> Truncation:
    kw = {}
    if cfg.z_max is not None:
        kw["z_max"] = cfg.z_max
    if cfg.t_deg is not None:
        kw["t_deg"] = cfg.t_deg
    return tr.with_(**kw) if kw else tr


def _connection(cfg: RunConfig) -> ConnectionStructure:
    if cfg.builtin == "i2m-normal":
        m = _need_m(cfg)
        return make_normal_form(m, cfg.params["alpha"], cfg.params["lambda"], _override(default_truncation(m), cfg))
    if cfg.input is None:
        raise PreconditionError("this command needs --input connection.json or --builtin i2m-normal")
    doc = _load(cfg.input)
    S = ConnectionStructure.from_json(doc)
    tr = _override(S.trunc, cfg)
    if tr != S.trunc:
        S = ConnectionStructure.from_json(doc, trunc=tr)
    return S


def _need_m(cfg: RunConfig) -> int:
    m = cfg.params.get("m")
    if m is None:
        raise PreconditionError("--m is required")
    return m


def _nf(cfg: RunConfig) -> I2mNormalForm:
    return I2mNormalForm(_need_m(cfg), cfg.params["alpha"], cfg.params["lambda"])


def _model(cfg: RunConfig) -> FManifoldModel:
    b = cfg.builtin
    t_deg = cfg.t_deg
    if b == "example214":
        return make_builtin("Example214", t_deg=t_deg)
    if b == "I2":
        return make_builtin("I2", m=_need_m(cfg), t_deg=t_deg)
    if b == "A1n":
        return make_builtin("A1n", n=cfg.params.get("n") or 3, t_deg=t_deg)
    if b == "N2":
        return make_builtin("N2", g=cfg.params.get("g") or "t2^2", t_deg=t_deg)
    if cfg.input is None:
        raise PreconditionError("need --input or --builtin")
    return FManifoldModel.from_json(_load(cfg.input), t_deg)


def _structure_checks(S: ConnectionStructure) -> Report:
    rep = Report()
    for r in flatness_residuals(S):
        rep.add(r.check())
    rep.extend(S.pairing_checks())
    for r in extract_higgs(S).invariants():
        rep.add(r.check())
    return rep


def _model_checks(F: FManifoldModel) -> Report:
    rep = Report()
    rep.extend(verify_algebra(F).checks)
    rep.extend(tensor_checks(integrability_residual(F), "2.1"))
    if F.euler is not None:
        rep.extend(tensor_checks(euler_residual(F), "2.1[E]"))
    return rep


def cmd_verify(cfg: RunConfig) -> Outcome:
    if cfg.builtin == "i2m-normal":
        m = _need_m(cfg)
        tr = _override(Truncation(z_max=8, t_deg=12, n_vars=2), cfg)
        S = make_normal_form(m, cfg.params["alpha"], cfg.params["lambda"], tr)
        rep = _structure_checks(S)
        return Outcome(0, rep, {"structure": S.to_json()})
    if cfg.builtin is not None:
        F = _model(cfg)
        return Outcome(0, _model_checks(F), {"model": F.to_json()})
    doc = _load(cfg.input) if cfg.input else None
    if doc is None:
        raise PreconditionError("verify needs --input or --builtin")
    if isinstance(doc, dict) and "kind" in doc:
        S = _connection(cfg)
        return Outcome(0, _structure_checks(S), {"kind": S.kind})
    F = FManifoldModel.from_json(doc, cfg.t_deg)
    return Outcome(0, _model_checks(F), {"model": F.to_json()})


def cmd_bracket_check(cfg: RunConfig) -> Outcome:
    F = _model(cfg)
    rep = Report()
    data = {"model": F.name}
    if cfg.builtin == "example214":
        res = bracket_closure(F, example214_ideal(F))
        tr = F.trunc
        rad = example214_radical()
        gens = [CotangentPoly.parse(t, tr) for t in ("y1 - 1", "y2", "y3", "y4")]
        ok = True
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                ok = ok and reduce_mod_linear(poisson(gens[i], gens[j]), rad).is_zero()
        rep.add(Check("2.13[radical]", ok, None, "brackets of the radical generators reduce to 0"))
    else:
        res = bracket_closure(F)
    for w in res.witnesses:
        rep.add(Check("2.13[closure]", False, str(w.bracket), f"{{{w.first}, {w.second}}} reduces to {w.reduced}"))
    if res.closed:
        rep.add(Check("2.13[closure]", True, None, f"{res.pairs_checked} generator pairs close"))
    integ = tensor_checks(integrability_residual(F), "2.1")
    data.update({"closed": res.closed, "integrable": all(c.ok for c in integ),
                 "witnesses": [w.to_json() for w in res.witnesses]})
    return Outcome(0, rep, data)


def cmd_normalize(cfg: RunConfig) -> Outcome:
    m = _need_m(cfg)
    if cfg.builtin == "i2m-normal":
        tr = _override(Truncation(z_max=8, t_deg=12, n_vars=2), cfg)
        S = make_normal_form(m, cfg.params["alpha"], cfg.params["lambda"], tr)
    else:
        S = _connection(cfg)
    res = normalize(S, m)
    return Outcome(0, res.report, res.to_json())


def cmd_seminormalize(cfg: RunConfig) -> Outcome:
    m = _need_m(cfg)
    S = _connection(cfg)
    res = seminormalize_T(S, m)
    return Outcome(0, res.report, res.to_json())


def cmd_exponents(cfg: RunConfig) -> Outcome:
    ex = exponents(_nf(cfg))
    return Outcome(0, ex.report, ex.to_json())


def cmd_tep(cfg: RunConfig) -> Outcome:
    w = cfg.params.get("w")
    if w is None:
        raise PreconditionError("--w is required")
    nf = _nf(cfg)
    res = tep_extend(nf, w)
    if not res.ok:
        return Outcome(1, res.report, res.to_json(), f"refused: {res.reason}")
    return Outcome(0, res.report, res.to_json())


def cmd_extend(cfg: RunConfig) -> Outcome:
    S = _connection(cfg)
    ext = extend_to_pure_tl(S)
    return Outcome(0, ext.report, {"structure": ext.structure.to_json(), "gauge": ext.gauge.to_json()})


def cmd_construct(cfg: RunConfig) -> Outcome:
    S = _connection(cfg)
    rep = Report()
    pre = pure_tl_check(S)
    data = {}
    if not pre.ok:
        ext = extend_to_pure_tl(S)
        rep.extend(ext.report.checks)
        S = ext.structure
        data["extended"] = True
    omega = cfg.params.get("omega")
    if not omega:
        raise PreconditionError("--omega is required")
    try:
        pc = PrimitiveChoice.parse(omega)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot parse --omega {omega!r}") from None
    out = build_flat_f(PureStructure.from_connection(S), pc, euler=True if cfg.params.get("require_euler") else None,
                       metric=True if cfg.params.get("require_metric") else None)
    rep.extend(out.report.checks)
    data.update(out.to_json())
    return Outcome(0, rep, data)


def cmd_flat_model(cfg: RunConfig) -> Outcome:
    fm = flat_model(_nf(cfg), cfg.params.get("w"))
    return Outcome(0, fm.report, fm.to_json())


DISPATCH = {
    "verify": cmd_verify,
    "bracket-check": cmd_bracket_check,
    "normalize-i2m": cmd_normalize,
    "seminormalize": cmd_seminormalize,
    "exponents": cmd_exponents,
    "tep": cmd_tep,
    "extend": cmd_extend,
    "construct": cmd_construct,
    "flat-model": cmd_flat_model,
}


def run(cfg: RunConfig) -> Outcome:
    """Execute one command; errors become an Outcome with the mapped exit status."""
    try:
        out = DISPATCH[cfg.command](cfg)
    except ParseError as e:
        return Outcome(2, Report(), {}, f"parse error: {e}")
    except TepkitError as e:
        kind = "precondition" if e.exit_code == 3 else "refused"
        return Outcome(e.exit_code, Report(), {}, f"{kind}: {e}")
    if out.status == 0 and not out.report.ok:
        out.status = 1
    return out


def render(cfg: RunConfig, out: Outcome) -> str:
    if cfg.json:
        doc = {"command": cfg.command, "status": out.status, "ok": out.status == 0, "checks": out.report.to_json()}
        doc.update({k: v for k, v in out.data.items() if k != "checks"})
        if out.message:
            doc["message"] = out.message
        return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False)
    lines = out.report.lines()
    for key in ("normal_form", "exponents", "P0", "beta", "closed", "integrable"):
        if key in out.data:
            lines.append(f"{key}: {json.dumps(out.data[key], sort_keys=True, ensure_ascii=False)}")
    if out.message:
        lines.append(out.message)
    passed = sum(c.ok for c in out.report)
    lines.append(f"{passed}/{len(out.report)} checks pass; exit {out.status}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    out = run(cfg)
    print(render(cfg, out))
    return out.status


if __name__ == "__main__":
    sys.exit(main())
