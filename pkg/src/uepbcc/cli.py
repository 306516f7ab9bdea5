"""Batch command line: design, build, simulate, analyze, report, reproduce-table1.

Exit codes: 0 success, 2 validation error, 3 infeasible thresholds or
profile, 4 finished but a Monte Carlo budget ran out before the stop rule.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .construction import count_four_cycles, load_code, save_code, separation_score
from .degrees import InfeasibleProfileError, node_to_edge, write_distribution
from .experiment import ExperimentSpec, SpecError, load_spec
from .montecarlo import ErrorRateCurve, GridError, extract_thresholds, run_sweep
from .outage import (
    InfeasibleError, ThresholdSet, check_feasibility, format_table, full_report,
    reproduce_table1, table_row,
)

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _out_dir(args, spec: ExperimentSpec | None = None) -> Path:
    out = Path(args.output_dir or (spec.output_dir if spec else "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spec(args) -> ExperimentSpec:
    if not args.config:
        raise CliError(f"{args.command} needs --config")
    over = {"seed": args.seed, "workers": getattr(args, "workers", None)}
    spec = load_spec(args.config, **over)
    stop = {}
    if getattr(args, "max_frames", None) is not None:
        stop["max_frames"] = args.max_frames
    if getattr(args, "min_errors", None) is not None:
        stop["min_errors"] = args.min_errors
    if stop:
        spec = load_spec(args.config, **over, stop={**spec.to_dict()["stop"], **stop})
    return spec


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    print(f"wrote {path}")


# ----------------------------------------------------------------------------

def cmd_design(args) -> int:
    spec = _spec(args)
    out = _out_dir(args, spec)
    prof, c = spec.profile, spec.check
    write_distribution(spec.nu, out / "nu.txt")
    write_distribution(node_to_edge(spec.nu), out / "lambda.txt")
    write_distribution(c, out / "check.txt")
    _write_json(out / "profile.json", {
        **spec.provenance(),
        "profile": prof.to_dict(),
        "check_mean": float(c.mean()),
        "check": {str(d): float(v) for d, v in sorted(c.coeffs.items())},
        "nu_polynomial": spec.nu.polynomial(),
        "check_polynomial": c.polynomial(3),
    })
    print(f"nu(x) = {spec.nu.polynomial()}")
    print(f"c(x)  = {c.polynomial(3)}   (mean check degree {float(c.mean()):.3f})")
    print(f"classes: k1={prof.k1} k2={prof.k2} r={prof.r}")
    return EXIT_OK


def _code_for(spec: ExperimentSpec, out: Path, rebuild: bool = False):
    stem = out / "code"
    if not rebuild and stem.with_suffix(".json").exists():
        code = load_code(stem)
        if code.meta.get("code_hash") == spec.code_hash:
            return code, False
    code = spec.build_code()
    code = code.with_meta(**spec.provenance(), code_hash=spec.code_hash)
    save_code(code, stem)
    return code, True


def cmd_build(args) -> int:
    spec = _spec(args)
    out = _out_dir(args, spec)
    code, _ = _code_for(spec, out, rebuild=True)
    print(f"wrote {out / 'code.alist'} and {out / 'code.json'}")
    print(f"n={code.n} k={code.k} k1={code.profile.k1} k2={code.profile.k2} "
          f"4-cycles={count_four_cycles(code.h)} mixed PC1/PC2 checks={separation_score(code)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _spec(args)
    out = _out_dir(args, spec)
    code, fresh = _code_for(spec, out)
    if fresh:
        print(f"built code -> {out / 'code.alist'}")
    names = args.modulation or [m.name for m in spec.modulations]
    exhausted = []
    for name in names:
        m = spec.modulation(name)
        plan = m.plan(spec.snr_convention)

        def show(pt, name=name):
            print(f"  {name} {pt.snr_db:6.2f} dB  frames={pt.frames:<8d} P={pt.P:.3e} "
                  f"Pp={pt.Pp:.3e} Ps={pt.Ps:.3e}", flush=True)

        curve = run_sweep(code, plan, m.snr_db, spec.stop, fading=spec.fading,
                          master_seed=spec.seed, workers=spec.workers, max_iter=spec.max_iter,
                          progress=None if args.quiet else show)
        curve.meta = {**spec.provenance(), "modulation": name, "delta": spec.delta,
                      "eps": spec.eps, **curve.meta}
        path = out / f"curve_{name}.csv"
        curve.to_csv(path)
        curve.write_dat(out / f"curve_{name}")
        print(f"wrote {path}")
        if curve.meta["budget_exhausted"]:
            exhausted.append(f"{name} at {curve.meta['budget_exhausted']} dB")
    if exhausted:
        print("warning: max_frames reached before min_errors for " + ", ".join(exhausted)
              + "; confidence intervals are wide", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_analyze(args) -> int:
    spec = _spec(args) if args.config else None
    out = _out_dir(args, spec)
    paths = [Path(p) for p in args.curves] or sorted(out.glob("curve_*.csv"))
    if not paths:
        raise CliError("no curve CSVs given or found in the output directory")
    status = EXIT_OK
    for path in paths:
        if not path.exists():
            raise CliError(f"curve file {path} not found")
        curve = ErrorRateCurve.from_csv(path)
        delta = args.delta if args.delta is not None else float(curve.meta.get("delta", spec.delta if spec else 1e-4))
        eps = args.eps if args.eps is not None else float(curve.meta.get("eps", spec.eps if spec else 0.1))
        try:
            t = extract_thresholds(curve, delta, eps)
        except GridError as exc:
            raise CliError(f"{path}: {exc}") from exc
        ok, margin = check_feasibility(t)
        name = curve.meta.get("modulation", path.stem.removeprefix("curve_"))
        payload = {
            "spec_hash": curve.meta.get("spec_hash"), "seed": curve.meta.get("seed"),
            "version": __version__, "modulation": name, "source": str(path),
            "thresholds": t.to_dict(), "feasible": ok, "margin_db": margin,
        }
        _write_json(out / f"thresholds_{name}.json", payload)
        print(f"  beta_p={t.beta_p.db:.2f} dB alpha_s={t.alpha_s.db:.2f} dB beta_s={t.beta_s.db:.2f} dB")
        if not ok:
            print(f"warning: {name}: alpha_s <= beta_p (margin {margin:.2f} dB), no secure operating point",
                  file=sys.stderr)
            status = EXIT_INFEASIBLE
    return status


def cmd_report(args) -> int:
    spec = _spec(args) if args.config else None
    entries = []
    if args.beta_p is not None or args.alpha_s is not None or args.beta_s is not None:
        if None in (args.beta_p, args.alpha_s, args.beta_s):
            raise CliError("inline thresholds need all of --beta-p, --alpha-s and --beta-s")
        entries.append((args.name or "inline", ThresholdSet.from_db(args.beta_p, args.alpha_s, args.beta_s), None))
    for p in args.thresholds:
        p = Path(p)
        if not p.exists():
            raise CliError(f"thresholds file {p} not found")
        d = json.loads(p.read_text())
        entries.append((d.get("modulation", p.stem), ThresholdSet.from_dict(d["thresholds"]), d.get("spec_hash")))
    if not entries:
        raise CliError("report needs thresholds files or --beta-p/--alpha-s/--beta-s")

    hashes = {h for _, _, h in entries if h is not None}
    if spec is not None:
        hashes.add(spec.spec_hash)
    if len(hashes) > 1:
        msg = f"inputs come from different experiment specs ({', '.join(sorted(hashes))})"
        if not args.allow_hash_mismatch:
            raise CliError(msg + "; pass --allow-hash-mismatch to combine them anyway")
        print("warning: " + msg, file=sys.stderr)

    eta_dec = args.eta_decimals if args.eta_decimals is not None else (spec.eta_decimals if spec else 2)
    eta_max = args.eta_max if args.eta_max is not None else (spec.eta_max if spec else None)
    rows, reports = [], []
    for name, t, _ in entries:
        try:
            rep = full_report(t, eta_max=eta_max, eta_decimals=None if eta_max is not None else eta_dec)
        except InfeasibleError as exc:
            raise CliError(f"{name}: {exc}", EXIT_INFEASIBLE) from exc
        rows.append(table_row(name, rep))
        reports.append({"scheme": name, **rep.to_dict()})
    table = format_table(rows)
    print(table)
    if args.output_dir:
        out = _out_dir(args)
        prov = {"spec_hash": ";".join(sorted(hashes)) or None,
                "seed": spec.seed if spec else None, "version": __version__}
        (out / "report.txt").write_text(
            "".join(f"# {k}={v}\n" for k, v in prov.items()) + table + "\n")
        _write_json(out / "report.json", {**prov, "rows": reports})
    return EXIT_OK


def cmd_table1(args) -> int:
    rows = reproduce_table1(eta_decimals=args.eta_decimals)
    if args.json:
        print(json.dumps({"version": __version__,
                          "rows": [{"scheme": n, **r.to_dict()} for n, r in rows]}, indent=2))
    else:
        print(format_table([table_row(n, r) for n, r in rows]))
    return EXIT_OK


# ----------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uepbcc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", "-c", required=False,
                       help="experiment YAML" + ("" if config_required else " (optional)"))
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--output-dir", "-o", help="override the configured output directory")
        return p

    common(sub.add_parser("design", help="degree report and protection classes"))
    common(sub.add_parser("build", help="construct the parity-check matrix"))
    p = common(sub.add_parser("simulate", help="Monte Carlo error-rate curves"))
    p.add_argument("--workers", "-j", type=int)
    p.add_argument("--modulation", "-m", action="append", help="restrict to named plan(s)")
    p.add_argument("--max-frames", type=int)
    p.add_argument("--min-errors", type=int)
    p.add_argument("--quiet", "-q", action="store_true")
    p = common(sub.add_parser("analyze", help="extract thresholds from curves"), False)
    p.add_argument("curves", nargs="*", help="curve CSVs (default: curve_*.csv in the output dir)")
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p = common(sub.add_parser("report", help="outage and security-gap table"), False)
    p.add_argument("thresholds", nargs="*", help="thresholds JSON files")
    p.add_argument("--beta-p", type=float, help="dB")
    p.add_argument("--alpha-s", type=float, help="dB")
    p.add_argument("--beta-s", type=float, help="dB")
    p.add_argument("--name", help="row label for inline thresholds")
    p.add_argument("--eta-max", type=float, help="explicit Bob outage budget")
    p.add_argument("--eta-decimals", type=int, help="truncate omega_min to this many decimals")
    p.add_argument("--allow-hash-mismatch", action="store_true")
    p = sub.add_parser("reproduce-table1", help="outage table from the published thresholds")
    p.add_argument("--eta-decimals", type=int, default=2)
    p.add_argument("--json", action="store_true")
    return ap


COMMANDS = {"design": cmd_design, "build": cmd_build, "simulate": cmd_simulate,
            "analyze": cmd_analyze, "report": cmd_report, "reproduce-table1": cmd_table1}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InfeasibleProfileError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SpecError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
