"""Command-line interface.

Every subcommand writes a canonical JSON report to stdout (or ``--out``)
and a short human summary to stderr.  Exit codes: 0 computed, 1 negative
verdict, 2 inconclusive at the configured bounds, 3 input error.
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .coeffs import ComplexRational
from .formats import (
    FormatError,
    ManifoldFile,
    MapFile,
    Report,
    canonical_json,
    load_json,
    series_terms,
)
from .geometry import (
    DefiningData,
    GenericSubmanifoldNF,
    essential_finiteness_test,
    finite_type_test,
    normalize,
    segre_map,
    verify_segre_identity,
)
from .mapping import check_sends, segre_injectivity_test
from .reflection import (
    HypothesisFailure,
    chain_agreement,
    convergence_ledger,
    reflection_identities,
    reflection_residuals,
)
from .series import TruncatedSeries

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3
DEFAULT_DEGREE = 8
DEFAULT_SEED = 17
DEFAULT_ALPHA_BOUND = 5
HEADROOM = 3


class InputError(Exception):
    pass


# -- plain JSON views -----------------------------------------------------------------


def plain(obj):
    """JSON-ready view of coefficients, series, tuples and nested containers."""
    if isinstance(obj, ComplexRational):
        return [ComplexRational.format_part(obj.re), ComplexRational.format_part(obj.im)]
    if isinstance(obj, TruncatedSeries):
        return {"nvars": obj.nvars, "precision": obj.precision, "terms": series_terms(obj)}
    if isinstance(obj, dict):
        return {_key(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(x) for x in obj]
    return obj


def _key(k) -> str:
    if isinstance(k, tuple):
        return ",".join(_key(x) for x in k)
    return str(k)


def named_series(s: TruncatedSeries, names: list[str]) -> dict:
    out = plain(s)
    out["text"] = s.to_str(names)
    return out


# -- inputs ---------------------------------------------------------------------------


def data_dir() -> Path:
    return Path(str(resources.files("crforge") / "data"))


def bundled_names() -> list[str]:
    return sorted(p.stem for p in data_dir().glob("*.json"))


def resolve(arg: str) -> Path:
    path = Path(arg)
    if path.is_file():
        return path
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    candidate = data_dir() / f"{stem}.json"
    if candidate.is_file():
        return candidate
    raise InputError(f"no such file or bundled fixture: {arg}")


@dataclass
class Loaded:
    obj: object
    name: str
    digest: str
    exact: bool

    def info(self) -> dict:
        return {"name": self.name, "digest": self.digest}


def _fit(file, D: int):
    if D > file.degree and not file.exact:
        raise InputError(f"{file.name}: truncated at order {file.degree}, cannot run at D = {D}")
    if D >= file.degree:
        return file.build(D)
    return file.build().with_precision(D)


def load_manifold(arg: str, D: int) -> tuple[Loaded, bool]:
    """Manifold in normal coordinates, and whether it was normalized from defining data."""
    obj, dg = load_json(resolve(arg))
    file = ManifoldFile.from_json(obj)
    if file.mode == "defining":
        if D > file.degree and not file.exact:
            raise InputError(f"{file.name}: truncated at order {file.degree}, cannot run at D = {D}")
        data = file.build(D) if D >= file.degree else _truncate_defining(file.build(), D)
        M, _ = normalize(data)
        M.name = file.name
        return Loaded(M, file.name, dg, False), True
    return Loaded(_fit(file, D), file.name, dg, file.exact), False


def _truncate_defining(data: DefiningData, D: int) -> DefiningData:
    return DefiningData(data.N, data.d, data.rho.truncate(D), data.name)


def load_map(arg: str, D: int) -> Loaded:
    obj, dg = load_json(resolve(arg))
    file = MapFile.from_json(obj)
    return Loaded(_fit(file, D), file.name, dg, file.exact)


# -- report pieces ------------------------------------------------------------------


def rank_view(res) -> dict:
    out = {"rank": res.rank, "exact": res.exact, "symbolic_checked": res.symbolic_checked}
    if res.certificate is not None:
        c = res.certificate
        out["minor"] = {"point": plain(c.point), "rows": list(c.rows), "cols": list(c.cols), "value": plain(c.minor)}
    return out


def curve_view(curve) -> dict | None:
    if curve is None:
        return None
    return {
        "components": [named_series(c, ["s"]) for c in curve.components],
        "exponents": curve.exponents(),
        "verified_through": curve.order,
    }


def staircase_view(stair) -> dict:
    return {"status": stair.status, "codim": stair.codim, "degree_bound": stair.bound}


def essential_view(M: GenericSubmanifoldNF, alpha_bound: int) -> tuple[dict, dict]:
    ess = essential_finiteness_test(M, alpha_bound=alpha_bound)
    nonzero = [g for g in ess.generators if not g.series.is_zero()]
    verdict = staircase_view(ess.staircase)
    verdict["generators"] = len(nonzero)
    cert = {"curve": curve_view(ess.curve)}
    return verdict, cert


def _summary(text: str) -> None:
    print(text, file=sys.stderr)


# -- commands -----------------------------------------------------------------------


def cmd_analyze(args, ctx) -> tuple[Report, int]:
    loaded, normalized = load_manifold(args.manifold, ctx.D)
    M = loaded.obj
    ft = finite_type_test(M, k_max=args.max_k, seed=ctx.seed)
    ft_verdict = {"status": ft.status, "k1": ft.k1, "ranks": plain(ft.ranks), "N": M.N}
    ft_cert = {"ranks": {str(k): rank_view(r) for k, r in sorted(ft.certificates.items())}}
    if ft.rank_point is not None:
        ft_cert["rank_point"] = {"point": plain(ft.rank_point.point), "k": ft.rank_point.k, "rank": ft.rank_point.rank}
    elif ft.finite_type:
        ft_cert["rank_point_note"] = ft.rank_point_note
    ess_verdict, ess_cert = essential_view(M, args.alpha_bound)
    segre = {str(k): verify_segre_identity(M, k) for k in range(0, 5)}
    verdicts = {
        "n": M.n,
        "d": M.d,
        "normalized_from_defining": normalized,
        "finite_type": ft_verdict,
        "essential_finiteness": ess_verdict,
        "segre_identity": segre,
        "order": M.precision,
    }
    report = Report(
        "analyze", {"manifold": loaded.info()}, ctx.seed,
        {"degree": ctx.D, "max_k": ft.k_max, "alpha_bound": args.alpha_bound},
        verdicts, {"finite_type": ft_cert, "essential_finiteness": ess_cert},
    )
    k1 = f"yes({ft.k1})" if ft.finite_type else ft.status
    ess = f"Finite({ess_verdict['codim']})" if ess_verdict["status"] == "finite" else "Undetermined"
    _summary(f"{loaded.name}: finite type {k1}; essentially finite {ess}; Segre identity k<=4 {all(segre.values())}")
    code = EXIT_OK
    if not all(segre.values()):
        code = EXIT_NEGATIVE
    elif ft.status == "inconclusive":
        code = EXIT_INCONCLUSIVE
    return report, code


def _pair(args, ctx) -> tuple[Loaded, Loaded]:
    src, _ = load_manifold(args.source, ctx.D)
    if args.target == args.source:
        return src, src
    tgt, _ = load_manifold(args.target, ctx.D)
    return src, tgt


def _dims_ok(M, Mp, H) -> None:
    if H.source != (M.n, M.d) or H.target != (Mp.n, Mp.d):
        raise InputError(
            f"dimension mismatch: map {H.source}->{H.target}, manifolds {(M.n, M.d)}->{(Mp.n, Mp.d)}"
        )


def cmd_check_map(args, ctx) -> tuple[Report, int]:
    src, tgt = _pair(args, ctx)
    hm = load_map(args.map, ctx.D)
    M, Mp, H = src.obj, tgt.obj, hm.obj
    _dims_ok(M, Mp, H)
    rep = check_sends(M, Mp, H)
    verdicts = {"sends": rep.sends, "order": rep.order}
    certs: dict = {}
    defect = rep.first_defect()
    if defect is not None:
        j, (e, c) = defect
        certs["first_defect"] = {"component": j, "exponent": list(e), "coefficient": plain(c)}
        certs["residuals"] = [plain(r) for r in rep.residuals]
    inj = segre_injectivity_test(M, Mp, H, seed=ctx.seed)
    verdicts["segre_homomorphism"] = {"status": inj.status, "evidence": inj.evidence}
    if inj.relation is not None:
        names = [f"z'{i + 1}" for i in range(inj.relation.nvars)]
        certs["relation"] = named_series(inj.relation, names)
        certs["relation_order"] = inj.order
    report = Report(
        "check-map", {"source": src.info(), "target": tgt.info(), "map": hm.info()}, ctx.seed,
        {"degree": ctx.D}, verdicts, certs,
    )
    _summary(f"{hm.name}: sends {src.name} into {tgt.name}: {rep.sends} (order {rep.order}); Segre homomorphism {inj.status}")
    return report, EXIT_OK if rep.sends else EXIT_NEGATIVE


def cmd_segre(args, ctx) -> tuple[Report, int]:
    loaded, _ = load_manifold(args.manifold, ctx.D)
    M = loaded.obj
    if args.k < 0:
        raise InputError("--k must be nonnegative")
    comps = segre_map(M, args.k)
    names = [f"x{i + 1}" for i in range(comps.nvars)] if comps.nvars else []
    verdicts: dict = {"k": args.k, "parameters": comps.nvars}
    certs = {"components": [named_series(c, names) for c in comps]}
    code = EXIT_OK
    if args.verify:
        ok = verify_segre_identity(M, args.k)
        verdicts["identity_holds"] = ok
        code = EXIT_OK if ok else EXIT_NEGATIVE
    report = Report("segre", {"manifold": loaded.info()}, ctx.seed, {"degree": ctx.D}, verdicts, certs)
    _summary(f"{loaded.name}: Segre map of order {args.k} in {comps.nvars} parameters"
             + (f"; identity {verdicts['identity_holds']}" if args.verify else ""))
    return report, code


def _headroom(*loaded: Loaded) -> int:
    return HEADROOM if all(x.exact for x in loaded) else 0


def _sends_or_negative(M, Mp, H, name: str):
    rep = check_sends(M, Mp, H)
    if not rep.sends:
        return {"sends": False, "order": rep.order, "map": name}
    return None


def identity_names(ident) -> list[str]:
    N = ident.N
    out = [f"Z{i + 1}" for i in range(N)] + [f"zeta{i + 1}" for i in range(N)]
    for delta in ident.deltas:
        tag = "".join(str(x) for x in delta)
        for c in range(ident.n_components):
            out.append(f"dHbar{tag}_{c + 1}")
    return out


def cmd_reflect(args, ctx) -> tuple[Report, int]:
    src, tgt = _pair(args, ctx)
    hm = load_map(args.map, ctx.D)
    _dims_ok(src.obj, tgt.obj, hm.obj)
    h = _headroom(src, tgt, hm)
    M, Mp, H = (x.obj.with_precision(x.obj.precision + h) for x in (src, tgt, hm))
    inputs = {"source": src.info(), "target": tgt.info(), "map": hm.info()}
    bounds = {"degree": ctx.D, "headroom": h, "r_bound": args.r_bound}
    neg = _sends_or_negative(M, Mp, H, hm.name)
    if neg:
        _summary(f"{hm.name} does not send {src.name} into {tgt.name}")
        return Report("reflect", inputs, ctx.seed, bounds, {"status": "precondition_failed", **neg}), EXIT_NEGATIVE
    try:
        ident = reflection_identities(M, Mp, H, r_bound=args.r_bound)
    except HypothesisFailure as exc:
        _summary(f"reflection identities unavailable: {exc}")
        return Report("reflect", inputs, ctx.seed, bounds, {"status": "inconclusive", "reason": str(exc)}), EXIT_INCONCLUSIVE
    check = reflection_residuals(M, ident, H)
    names = identity_names(ident)
    comps = []
    for comp in ident.components:
        comps.append({
            "component": comp.index,
            "degree": comp.degree,
            "monic": True,
            "coefficients": [named_series(c, names) for c in comp.coeffs],
        })
    verdicts = {
        "status": "verified" if check.ok else "failed",
        "r": ident.r,
        "degrees": ident.degrees,
        "verified_through": check.order,
        "jet_codim": ident.choice.staircase.codim,
    }
    report = Report("reflect", inputs, ctx.seed, bounds, verdicts, {"identities": comps, "variables": names})
    _summary(f"{hm.name}: r = {ident.r}, degrees {ident.degrees}, verified {check.ok} through order {check.order}")
    return report, EXIT_OK if check.ok else EXIT_NEGATIVE


def cmd_determine(args, ctx) -> tuple[Report, int]:
    src, tgt = _pair(args, ctx)
    h1, h2 = load_map(args.first, ctx.D), load_map(args.second, ctx.D)
    for hm in (h1, h2):
        _dims_ok(src.obj, tgt.obj, hm.obj)
    h = _headroom(src, tgt, h1, h2)
    inputs = {"source": src.info(), "target": tgt.info(), "first": h1.info(), "second": h2.info()}
    bounds = {"degree": ctx.D, "headroom": h, "K": args.K, "k_max": args.k_max, "alpha_max": args.alpha_max}
    try:
        rep = chain_agreement(src.obj, tgt.obj, h1.obj, h2.obj, args.K, k_max=args.k_max,
                              alpha_max=args.alpha_max, headroom=h)
    except HypothesisFailure as exc:
        _summary(f"determination ladder not run: {exc}")
        return Report("determine", inputs, ctx.seed, bounds, {"status": "inconclusive", "reason": str(exc)}), EXIT_INCONCLUSIVE
    rungs = [{
        "k": r.k, "alpha": list(r.alpha), "K_required": r.K_required, "predicted": r.predicted,
        "agree": r.agree, "order": r.order, "shared_root": r.shared_root,
        "separation": r.separation, "jets_agree": r.jets_agree,
    } for r in rep.rungs]
    first = None if rep.first_disagreement is None else {
        "k": rep.first_disagreement[0], "alpha": list(rep.first_disagreement[1])}
    verdicts = {
        "conclusion": rep.conclusion,
        "first_disagreement": first,
        "jets_agree_to": rep.jets_agree_to,
        "r": rep.r,
        "conclusion_order": rep.conclusion_order,
        "direct_agreement_order": rep.direct_agreement_order,
    }
    report = Report("determine", inputs, ctx.seed, bounds, verdicts,
                    {"K_table": plain(rep.K_table), "rungs": rungs})
    _summary(f"{h1.name} vs {h2.name} with K = {args.K}: {rep.conclusion}"
             + (f", first disagreement at k={first['k']} alpha={first['alpha']}" if first else ""))
    if rep.first_disagreement is not None:
        return report, EXIT_NEGATIVE
    return report, EXIT_OK if rep.conclusion == "maps agree" else EXIT_INCONCLUSIVE


def cmd_ledger(args, ctx) -> tuple[Report, int]:
    src, tgt = _pair(args, ctx)
    hm = load_map(args.map, ctx.D)
    _dims_ok(src.obj, tgt.obj, hm.obj)
    h = _headroom(src, tgt, hm)
    inputs = {"source": src.info(), "target": tgt.info(), "map": hm.info()}
    bounds = {"degree": ctx.D, "headroom": h, "k_max": args.k_max, "alpha_max": args.alpha_max}
    M, Mp, H = (x.obj.with_precision(x.obj.precision + h) for x in (src, tgt, hm))
    neg = _sends_or_negative(M, Mp, H, hm.name)
    if neg:
        _summary(f"{hm.name} does not send {src.name} into {tgt.name}")
        return Report("ledger", inputs, ctx.seed, bounds, {"status": "precondition_failed", **neg}), EXIT_NEGATIVE
    try:
        led = convergence_ledger(M, Mp, H, k_max=args.k_max, alpha_max=args.alpha_max)
    except HypothesisFailure as exc:
        _summary(f"ledger not built: {exc}")
        return Report("ledger", inputs, ctx.seed, bounds, {"status": "inconclusive", "reason": str(exc)}), EXIT_INCONCLUSIVE
    rungs = [{
        "k": x.k, "alpha": list(x.alpha), "component": x.component, "kind": x.kind,
        "degree": x.degree, "gamma0": list(x.gamma0), "order": x.order, "verified": x.verified,
    } for x in led.rungs]
    verdicts = {
        "status": "verified" if led.all_verified else "failed",
        "r": led.r,
        "degrees": led.degrees,
        "rungs": len(rungs),
        "min_order": min(x.order for x in led.rungs),
        "out_of_scope": led.out_of_scope,
    }
    report = Report("ledger", inputs, ctx.seed, bounds, verdicts, {"rungs": rungs})
    _summary(f"{hm.name}: {len(rungs)} rungs, all verified {led.all_verified}, min order {verdicts['min_order']}")
    return report, EXIT_OK if led.all_verified else EXIT_NEGATIVE


def cmd_curve(args, ctx) -> tuple[Report, int]:
    loaded, _ = load_manifold(args.manifold, ctx.D)
    verdict, cert = essential_view(loaded.obj, args.alpha_bound)
    curve = cert["curve"]
    if verdict["status"] == "finite":
        verdict["curve"] = "none: essentially finite"
        code = EXIT_NEGATIVE
    else:
        verdict["curve"] = "found" if curve is not None else "not found"
        code = EXIT_OK if curve is not None else EXIT_INCONCLUSIVE
    report = Report("curve", {"manifold": loaded.info()}, ctx.seed,
                    {"degree": ctx.D, "alpha_bound": args.alpha_bound}, verdict, cert)
    _summary(f"{loaded.name}: essential finiteness {verdict['status']}, curve {verdict['curve']}")
    return report, code


# -- fixtures ---------------------------------------------------------------------------


def golden_dir() -> Path:
    return data_dir() / "golden"


def golden_cases() -> list[dict]:
    return json.loads((golden_dir() / "cases.json").read_text(encoding="utf-8"))["cases"]


def cmd_fixtures(args, ctx) -> tuple[Report, int]:
    if args.action == "list":
        manifolds, maps = [], []
        for name in bundled_names():
            obj, dg = load_json(data_dir() / f"{name}.json")
            entry = {"name": name, "digest": dg}
            if obj.get("format") == "crforge-map-v1":
                entry["manifold"] = obj.get("manifold", "")
                maps.append(entry)
            else:
                entry["mode"] = obj.get("mode")
                manifolds.append(entry)
        cases = [c["name"] for c in golden_cases()]
        _summary(f"{len(manifolds)} manifolds, {len(maps)} maps, {len(cases)} golden cases")
        return Report("fixtures list", {}, ctx.seed, {}, {"manifolds": manifolds, "maps": maps, "cases": cases}), EXIT_OK
    cases = golden_cases()
    if args.name not in (None, "all"):
        cases = [c for c in cases if c["name"] == args.name]
        if not cases:
            raise InputError(f"no golden case named {args.name}")
    results = {}
    worst = EXIT_OK
    for case in cases:
        text, code = run_to_text(case["argv"])
        path = golden_dir() / f"{case['name']}.json"
        entry = {"exit": code, "expected_exit": case["exit"]}
        if args.update:
            path.write_text(text, encoding="utf-8")
            entry["status"] = "updated"
        elif not path.is_file():
            entry["status"] = "missing"
        else:
            golden = path.read_text(encoding="utf-8")
            if golden == text and code == case["exit"]:
                entry["status"] = "match"
            else:
                entry["status"] = "mismatch"
                entry["diff"] = list(difflib.unified_diff(
                    golden.splitlines(), text.splitlines(), f"golden/{case['name']}", "current", lineterm=""))
        if entry["status"] in ("missing", "mismatch"):
            worst = EXIT_NEGATIVE
        results[case["name"]] = entry
        _summary(f"{case['name']}: {entry['status']} (exit {code})")
    return Report("fixtures run", {}, ctx.seed, {}, {"cases": results}), worst


# -- entry points -------------------------------------------------------------------


@dataclass
class Context:
    D: int
    seed: int


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{name} must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--degree", type=int, default=None, help="truncation order D (default 8)")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 17)")
    common.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    parser = argparse.ArgumentParser(prog="crforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="finite type, essential finiteness, Segre identities")
    p.add_argument("manifold")
    p.add_argument("--max-k", type=int, default=None)
    p.add_argument("--alpha-bound", type=int, default=DEFAULT_ALPHA_BOUND)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check-map", parents=[common], help="does H send M into M'")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("map")
    p.set_defaults(func=cmd_check_map)

    p = sub.add_parser("segre", parents=[common], help="Segre map of a given order")
    p.add_argument("manifold")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_segre)

    p = sub.add_parser("reflect", parents=[common], help="monic reflection identities")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("map")
    p.add_argument("--r-bound", type=int, default=4)
    p.set_defaults(func=cmd_reflect)

    p = sub.add_parser("determine", parents=[common], help="compare two maps along Segre chains")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--alpha-max", type=int, default=2)
    p.set_defaults(func=cmd_determine)

    p = sub.add_parser("ledger", parents=[common], help="verified identities along Segre chains")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("map")
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--alpha-max", type=int, default=2)
    p.set_defaults(func=cmd_ledger)

    p = sub.add_parser("curve", parents=[common], help="formal curve witness for essential infiniteness")
    p.add_argument("manifold")
    p.add_argument("--alpha-bound", type=int, default=DEFAULT_ALPHA_BOUND)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("fixtures", parents=[common], help="bundled inputs and golden reports")
    p.add_argument("action", choices=["list", "run"])
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--update", action="store_true", help="rewrite golden reports")
    p.set_defaults(func=cmd_fixtures)
    return parser


def run_command(argv: list[str]) -> tuple[Report | None, int, str]:
    """Parse and execute; returns the report, exit code and an error message."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return None, EXIT_INPUT if exc.code else EXIT_OK, "usage error"
    try:
        D = args.degree if args.degree is not None else _env_int("CRFORGE_DEGREE", DEFAULT_DEGREE)
        seed = args.seed if args.seed is not None else _env_int("CRFORGE_SEED", DEFAULT_SEED)
        if D < 1:
            raise InputError("truncation order must be positive")
        report, code = args.func(args, Context(D, seed))
    except (InputError, FormatError) as exc:
        return None, EXIT_INPUT, str(exc)
    return report, code, ""


def run_to_text(argv: list[str]) -> tuple[str, int]:
    report, code, err = run_command(argv)
    if report is None:
        return canonical_json({"error": err, "exit": code}), code
    return report.emit(), code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    report, code, err = run_command(argv)
    if report is None:
        if err and err != "usage error":
            print(f"error: {err}", file=sys.stderr)
        return code
    text = report.emit()
    peek = argparse.ArgumentParser(add_help=False)
    peek.add_argument("--out", default=None)
    out = peek.parse_known_args(argv)[0].out
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
