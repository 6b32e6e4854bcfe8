"""Command-line front end.

Every command writes one JSON report with a top-level ``"schema"`` field,
the full input instance, the result and a re-verification of the result
computed from the serialized form alone.  Exit status: 0 verified output,
1 error, 2 hypothesis violation, 3 a produced certificate failed verification.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ApproxGroupError, CapExceeded, HypothesisViolation, SpecError, VerificationFailure
from .groups import make_context, parse_group_shorthand
from .setcalc import ElementSet, build_set, certify_approx, covers, doubling, parse_set_shorthand, product_set

SCHEMA = "approxgroup-lab/1"
COMMANDS = ("doubling", "certify", "decompose", "structure", "progression", "torsion", "growth")

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS, EXIT_BUG = 0, 1, 2, 3

log = logging.getLogger("approxgroup")


@dataclass
class RunConfig:
    command: str
    group: object = None
    set: object = None
    family: object = None
    cap: int | None = None
    n: int | None = None
    n_max: int | None = None
    c: float = 1.0
    alpha: float = 5.0
    r: int | None = None
    rank_cap: int = 3
    exp_cap: int = 4
    certificate: bool = False
    out: str | None = None
    csv: str | None = None
    verbosity: int = 0
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise SpecError(f"unknown command {self.command!r}")
        for name in ("cap", "rank_cap", "exp_cap", "n", "n_max", "r"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise SpecError(f"{name} must be positive")
        if self.c <= 0 or self.alpha <= 0:
            raise SpecError("c and alpha must be positive")
        if self.group is None:
            raise SpecError("a group is required (--group)")
        if self.command != "growth" and self.set is None:
            raise SpecError("a set is required (--set)")
        return self

    def input_record(self):
        """The instance as it is embedded in the report."""
        rec = {"group": _group_spec(self.group, self.cap), "set": _set_spec(self.set)}
        if self.family is not None:
            rec["family"] = _load_json_arg(self.family)
        for name in ("n", "n_max", "r"):
            if getattr(self, name) is not None:
                rec[name] = getattr(self, name)
        rec.update(c=self.c, alpha=self.alpha, rank_cap=self.rank_cap, exp_cap=self.exp_cap, certificate=self.certificate)
        return rec


# --------------------------------------------------------------------------
# argument decoding
# --------------------------------------------------------------------------


def _load_json_arg(value):
    """A JSON literal, ``@path`` to a JSON file, or an already-decoded value."""
    if not isinstance(value, str):
        return value
    text = value.strip()
    if text.startswith("@"):
        return json.loads(Path(text[1:]).read_text())
    if text[:1] in "[{" or text in ("true", "false"):
        return json.loads(text)
    return text


def _group_spec(value, cap=None):
    spec = _load_json_arg(value)
    if isinstance(spec, str):
        spec = parse_group_shorthand(spec)
    if not isinstance(spec, dict):
        raise SpecError("group must be a shorthand string or a JSON object")
    spec = dict(spec)
    if cap is not None:
        spec["cap"] = cap
    return spec


def _set_spec(value):
    if value is None:
        return None
    spec = _load_json_arg(value)
    return parse_set_shorthand(spec) if isinstance(spec, str) else spec


def build_instance(rec):
    ctx = make_context(rec["group"])
    A = build_set(ctx, rec["set"]) if rec.get("set") is not None else None
    return ctx, A


def _family(ctx, rec):
    from .resid import QuotientFamily

    spec = rec.get("family")
    if spec is None:
        if ctx.finite:
            spec = {"identity": True}
        else:
            raise SpecError("an infinite group needs a quotient family (--family)")
    return QuotientFamily.from_spec(ctx, spec)


def _keys(ctx, items):
    return [ctx.key_of(x) for x in items]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_doubling(rec):
    ctx, A = build_instance(rec)
    cert = certify_approx(A)
    return {"set_size": len(A), "doubling": str(doubling(A)), "certificate": cert.to_json()}, cert.verify()


def cmd_certify(rec):
    ctx, A = build_instance(rec)
    cert = certify_approx(A)
    return {"certificate": cert.to_json()}, cert.verify()


def cmd_decompose(rec):
    from .structure import dimension_chain

    ctx, A = build_instance(rec)
    cert = dimension_chain(A, strict=False)
    return {"chain": cert.to_json()}, not cert.bug_flag


def cmd_structure(rec):
    ctx, A = build_instance(rec)
    if ctx.finite and rec.get("family") is None:
        from .structure import nilpotent_structure

        res = nilpotent_structure(A, rank_cap=rec["rank_cap"], exp_cap=rec["exp_cap"])
        return {"mode": "nilpotent", "structure": res.to_json()}, not res.bug_flag
    from .resid import residual_structure

    res = residual_structure(A, _family(ctx, rec))
    return {"mode": "residual", "structure": res.to_json()}, not res.bug_flag


def cmd_progression(rec):
    from .progression import coset_nilprogression_fit
    from .structure import nilpotent_structure

    ctx, A = build_instance(rec)
    if not ctx.finite:
        raise SpecError("progression fitting needs a finite group; finitize through a quotient first")
    res = nilpotent_structure(A, rank_cap=rec["rank_cap"], exp_cap=rec["exp_cap"])
    fit = coset_nilprogression_fit(A, res)
    ok = not res.bug_flag and all(ch["status"] == "pass" for ch in fit.checks)
    return {"structure": res.to_json(), "progression": fit.to_json()}, ok


def cmd_torsion(rec):
    ctx, A = build_instance(rec)
    if rec.get("r") is None:
        raise SpecError("torsion needs the order bound r (--r)")
    if ctx.finite and rec.get("family") is None:
        from .structure import torsion_structure

        res = torsion_structure(A, rec["r"])
        return {"mode": "finite", "structure": res.to_json()}, not res.bug_flag
    from .resid import residual_torsion_structure

    res = residual_torsion_structure(A, rec["r"], _family(ctx, rec))
    return {"mode": "residual", "structure": res.to_json()}, not res.bug_flag


def cmd_growth(rec, csv_path=None):
    from .growth import ball_sizes, gap_detect, growth_certificate, required_radius
    from .setcalc import symmetrize

    ctx = make_context(rec["group"])
    S = build_set(ctx, rec["set"]) if rec.get("set") is not None else symmetrize(ctx, ctx.generators())
    n = rec.get("n")
    if n is None:
        raise SpecError("growth needs a radius (--n)")
    need = max(n, rec.get("n_max") or n)
    if rec["certificate"]:
        need = max(need, required_radius(n))
    report = ball_sizes(ctx, S, need)
    hits = gap_detect(report, rec["c"])
    if csv_path:
        Path(csv_path).write_text(report.to_csv(rec["c"]))
    result = {"growth": report.to_json(), "gap_at_n": n in hits}
    if report.partial:
        raise CapExceeded(f"ball sizes stopped at radius {report.n_max} (cap)", partial=report.n_max)
    if n not in hits:
        raise HypothesisViolation("gap not detected", witness=result)
    if rec["certificate"]:
        cert = growth_certificate(ctx, S, n, rec["c"], fam=_family(ctx, rec) if not ctx.finite or rec.get("family") else None, alpha=rec["alpha"], report=report)
        result["certificate"] = cert.to_json()
        return result, not cert.bug_flag
    return result, True


_DISPATCH = {
    "doubling": cmd_doubling,
    "certify": cmd_certify,
    "decompose": cmd_decompose,
    "structure": cmd_structure,
    "progression": cmd_progression,
    "torsion": cmd_torsion,
}


# --------------------------------------------------------------------------
# re-verification from the serialized report
# --------------------------------------------------------------------------


def reverify(report) -> bool:
    """Check a report's result using only the JSON it contains.

    A malformed or tampered report is reported as not verifying.
    """
    try:
        return _reverify(report)
    except (ApproxGroupError, KeyError, TypeError, ValueError, IndexError):
        log.debug("re-verification failed", exc_info=True)
        return False


def _reverify(report) -> bool:
    rec, res, cmd = report["input"], report["result"], report["command"]
    if cmd in ("doubling", "certify"):
        ctx, A = build_instance(rec)
        cert = res["certificate"]
        X = ElementSet(ctx, _keys(ctx, cert["cover"]))
        return len(X) == cert["K"] and covers(X, A, product_set(A, 2)) is None
    if cmd == "decompose":
        return _reverify_chain(rec, res["chain"])
    if cmd == "structure" and res["mode"] == "nilpotent":
        return _reverify_structure(rec, res["structure"])
    # the remaining pipelines are deterministic: re-derive and compare
    again = json.loads(json.dumps(_compute(cmd, rec)[0], sort_keys=True, default=str))
    return again == json.loads(json.dumps(res, sort_keys=True, default=str))


def _reverify_chain(rec, chain):
    from .structure import ChainCertificate, verify_chain
    from .subgroups import closure

    ctx, A = build_instance(rec)

    def sub(js):
        H = closure(ctx, _keys(ctx, js["generators"]))
        if len(H) != js["order"]:
            raise VerificationFailure("subgroup order differs from the report")
        return H

    cert = ChainCertificate(
        A=A,
        K=chain["K"],
        k=chain["k"],
        C=[sub(c) for c in chain["C"]],
        D=[sub(d) for d in chain["D"]],
        gammas=_keys(ctx, chain["gamma"]),
        H=[sub(h) for h in chain["H"]],
        stages=chain["stages"],
    )
    if certify_approx(A).K != cert.K:
        return False
    return not verify_chain(cert).bug_flag


def _reverify_structure(rec, st):
    from .structure import minimal_power, _quotient_step
    from .subgroups import closure, generated_by, normality_witness

    ctx, A = build_instance(rec)
    H = closure(ctx, _keys(ctx, st["H"]["generators"]))
    C = closure(ctx, _keys(ctx, st["C"]["generators"]))
    X = ElementSet(ctx, _keys(ctx, st["cover"]))
    return (
        H.issubset(C)
        and normality_witness(H, C) is None
        and minimal_power(A, H) == st["achieved_exponent"]
        and _quotient_step(C, H) == st["step"]
        and generated_by(product_set(A, 6).restrict(C)) == C
        and A.issubset(_mul(X, C))
    )


def _mul(X, C):
    from .setcalc import mul_sets

    return mul_sets(X, C)


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def _compute(cmd, rec, csv_path=None):
    if cmd == "growth":
        return cmd_growth(rec, csv_path)
    return _DISPATCH[cmd](rec)


def run(config: RunConfig):
    """Execute one command; returns ``(exit_status, report)``."""
    report = {"schema": SCHEMA, "version": __version__, "command": config.command}
    try:
        config.validate()
        rec = config.input_record()
        report["input"] = rec
        started = time.perf_counter()
        result, ok = _compute(config.command, rec, config.csv)
        report["result"] = result
        report["elapsed_seconds"] = round(time.perf_counter() - started, 3)
        if not ok:
            report["status"] = "bug"
            return EXIT_BUG, report
        report["reverified"] = reverify(report)
        if not report["reverified"]:
            report["status"] = "bug"
            return EXIT_BUG, report
        report["status"] = "ok"
        return EXIT_OK, report
    except HypothesisViolation as exc:
        report.update(status="hypothesis_violation", message=str(exc), witness=_jsonable(exc.witness))
        return EXIT_HYPOTHESIS, report
    except VerificationFailure as exc:
        rep = exc.report
        report.update(status="bug", message=str(exc), result=rep.to_json() if hasattr(rep, "to_json") else _jsonable(rep))
        return EXIT_BUG, report
    except (ApproxGroupError, OSError, ValueError, KeyError, TypeError) as exc:
        log.debug("error", exc_info=True)
        report.update(status="error", message=f"{type(exc).__name__}: {exc}")
        return EXIT_ERROR, report


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=str))


def dump_report(report, timestamp=True) -> str:
    """Canonical JSON text; ``timestamp`` and timing fields are the only run-dependent parts."""
    out = dict(report)
    if timestamp:
        out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    else:
        out.pop("timestamp", None)
        out.pop("elapsed_seconds", None)
    return json.dumps(out, sort_keys=True, indent=2, default=str) + "\n"


def build_parser():
    p = argparse.ArgumentParser(prog="approxgroup", description="Approximate-group certificates for concrete groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        q = sub.add_parser(name)
        q.add_argument("--config", help="JSON file whose keys mirror the flags")
        q.add_argument("--group", help="shorthand (ut_mod:3:5, ut_int:3, abelian:5,0, free:2), JSON or @file")
        q.add_argument("--set", help="shorthand (ball:gens=xy:r=2, interval:N, whole, subgroup:xy), JSON or @file")
        q.add_argument("--family", help="quotient family JSON or @file")
        q.add_argument("--cap", type=int, help="enumeration cap")
        q.add_argument("--out", help="write the JSON report here instead of stdout")
        q.add_argument("-v", "--verbose", action="count", default=0)
        q.add_argument("--rank-cap", type=int)
        q.add_argument("--exp-cap", type=int)
        if name == "torsion":
            q.add_argument("--r", type=int, help="bound on element orders")
        if name == "growth":
            q.add_argument("--n", type=int)
            q.add_argument("--n-max", type=int)
            q.add_argument("--c", type=float)
            q.add_argument("--alpha", type=float)
            q.add_argument("--csv", help="write n, |S^n|, threshold, flag rows here")
            q.add_argument("--certificate", action="store_true", default=None)
    return p


def config_from_args(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    for key, val in vars(args).items():
        if key in ("config", "verbose") or val is None:
            continue
        values[key] = val
    values["verbosity"] = max(args.verbose, int(values.get("verbosity", 0)))
    known = set(RunConfig.__dataclass_fields__)
    extra = {k: values.pop(k) for k in list(values) if k not in known}
    if extra:
        raise SpecError(f"unknown config keys {sorted(extra)}")
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (ApproxGroupError, OSError, ValueError, TypeError) as exc:
        print(json.dumps({"schema": SCHEMA, "status": "error", "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.WARNING - 10 * min(config.verbosity, 2), format="%(levelname)s %(message)s")
    status, report = run(config)
    text = dump_report(report)
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)
    if status != EXIT_OK:
        print(f"{report['status']}: {report.get('message', '')}".rstrip(": "), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
