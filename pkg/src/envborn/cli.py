"""Command-line front end: scenario ingestion, pipeline runs, verification reports.

Subcommands
-----------
schmidt   decompose a composite state, print coefficients and probabilities
derive    run the full premeasurement/probability pipeline with audits
mixtures  proper vs improper mixture equivalence over random projectors
sample    derive, then realize the probabilities as seeded ensemble counts
report    pretty-print a stored structured report

Exit codes: 0 all checks pass, 1 verification failure, 2 input error.
Structured output is canonical JSON (sorted keys), byte-stable for a fixed
scenario and seed.  ``ENVBORN_TOLERANCE`` overrides the built-in operator
tolerance for scenarios that do not pin one; ``--tolerance`` overrides both.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .born import derive_probabilities
from .ensemble import SampleRun, frequency_check, sample_outcomes
from .hilbert import DEFAULT_TOL
from .mixtures import proper_improper_equivalence
from .scenario import (
    SCHEMA_VERSION,
    Scenario,
    ScenarioError,
    encode_vector,
    load_scenario,
    parse_scenario,
)
from .schmidt import reconstruct, schmidt_decompose, schmidt_probabilities

__all__ = ["main"]

EXIT_PASS = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2

_ENV_TOLERANCE = "ENVBORN_TOLERANCE"


def _jsonable(value):
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _dump(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    raw = scenario.canonical()
    if getattr(args, "tolerance", None) is not None:
        raw["tolerances"]["operator"] = float(args.tolerance)
    if getattr(args, "seed", None) is not None:
        raw["seed"] = int(args.seed)
    if getattr(args, "trials", None) is not None and "mixture" in raw:
        raw["mixture"]["trials"] = int(args.trials)
    return parse_scenario(raw)


def _envelope(command: str, scenario: Scenario, section_name: str, section: dict, passed: bool) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "scenario": scenario.canonical(),
        section_name: section,
        "pass": bool(passed),
    }


# -- command implementations --------------------------------------------------


def run_schmidt(scenario: Scenario) -> dict:
    psi = scenario.composite_state()
    form = schmidt_decompose(psi)
    back = reconstruct(form)
    residual = float(
        np.linalg.norm(back.state.amplitudes - psi.state.amplitudes)
    )
    section = {
        "coefficients": [float(c) for c in form.coefficients],
        "basis1": [encode_vector(v.amplitudes) for v in form.basis1],
        "basis2": [encode_vector(v.amplitudes) for v in form.basis2],
        "probabilities": [float(p) for p in schmidt_probabilities(form)],
        "round_trip_residual": residual,
        "tolerance": scenario.operator_tol,
    }
    return _envelope("schmidt", scenario, "schmidt", section, residual <= scenario.operator_tol)


def _derivation_section(scenario: Scenario) -> tuple[dict, list[float], bool]:
    model = scenario.model()
    phi = scenario.input_state()
    report = derive_probabilities(
        model, phi, tol=scenario.operator_tol, seed=scenario.seed
    )
    flags = report.flags
    audits = {
        name: {"ok": ok, "max_residual": report.audit_residuals[name]}
        for name, ok in (
            ("calibration", flags.cc_ok),
            ("nondemolition", flags.nondemolition_ok),
            ("norm_law", flags.norm_law_ok),
            ("biorthogonality", flags.biorthogonality_ok),
            ("additivity", flags.additivity_ok),
            ("complement", flags.complement_ok),
            ("prc", flags.prc_ok),
        )
    }
    section = {
        "outcomes": [
            {
                "outcome": r.outcome,
                "eigenvalue": r.eigenvalue,
                "derived": r.derived,
                "oracle": r.oracle,
                "residual": r.residual,
                "schmidt_detail": list(r.schmidt_detail),
                "complement_residual": r.complement_residual,
            }
            for r in report.records
        ],
        "audits": audits,
        "audit_seed": scenario.seed,
        "tolerance": scenario.operator_tol,
    }
    return section, report.derived, flags.all_ok


def run_derive(scenario: Scenario) -> dict:
    section, _, passed = _derivation_section(scenario)
    return _envelope("derive", scenario, "derivation", section, passed)


def run_mixtures(scenario: Scenario) -> dict:
    spec = scenario.mixture_spec()
    partner = scenario.mixture_partner()
    trials = scenario.raw["mixture"]["trials"]
    try:
        residual = proper_improper_equivalence(
            spec, partner, trials=trials, seed=scenario.seed, tol=scenario.operator_tol
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    section = {
        "trials": trials,
        "seed": scenario.seed,
        "auto_purify": scenario.raw["mixture"]["auto_purify"],
        "max_equivalence_residual": residual,
        "tolerance": scenario.operator_tol,
    }
    return _envelope(
        "mixtures", scenario, "mixtures", section, residual <= scenario.operator_tol
    )


def run_sample(scenario: Scenario, fail_fast: bool = False) -> dict:
    derivation, derived, derive_ok = _derivation_section(scenario)
    sampling = scenario.sampling()
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "sample",
        "scenario": scenario.canonical(),
        "derivation": derivation,
    }
    if fail_fast and not derive_ok:
        report["sampling"] = None
        report["pass"] = False
        return report
    run = sample_outcomes(derived, sampling["n"], sampling["seed"])
    bias = sampling.get("bias")
    if bias is not None:
        # documented test hook: shift counts to exercise the z-bound detector
        if len(bias) != len(run.counts):
            raise ScenarioError("sampling.bias length does not match outcome count")
        if sum(bias) != 0:
            raise ScenarioError("sampling.bias must sum to zero")
        counts = tuple(c + b for c, b in zip(run.counts, bias))
        if any(c < 0 for c in counts):
            raise ScenarioError("sampling.bias drives a count negative")
        run = SampleRun(run.probabilities, run.sample_count, run.seed, counts)
    freq = frequency_check(run)
    report["sampling"] = {
        "n": run.sample_count,
        "seed": run.seed,
        "probabilities": list(run.probabilities),
        "counts": list(run.counts),
        "zscores": list(freq.zscores),
        "sigmas": freq.sigmas,
        "bias_applied": list(bias) if bias is not None else None,
        "pass": freq.passed,
    }
    report["pass"] = bool(derive_ok and freq.passed)
    return report


# -- text rendering ------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def render_text(report: dict) -> str:
    lines = []
    scenario = report.get("scenario", {})
    lines.append(f"scenario: {scenario.get('name', '?')}  command: {report.get('command', '?')}")
    if "schmidt" in report:
        s = report["schmidt"]
        lines.append(f"  coefficients:  {'  '.join(_fmt(c) for c in s['coefficients'])}")
        lines.append(f"  probabilities: {'  '.join(_fmt(p) for p in s['probabilities'])}")
        for side in ("basis1", "basis2"):
            for i, vec in enumerate(s[side]):
                amps = "  ".join(f"{re:+.6f}{im:+.6f}j" for re, im in vec)
                lines.append(f"  {side}[{i}]:  {amps}")
        lines.append(f"  round-trip residual: {_fmt(s['round_trip_residual'])}")
    if "derivation" in report and report["derivation"] is not None:
        d = report["derivation"]
        lines.append("  outcome  eigenvalue      derived         oracle          residual")
        for rec in d["outcomes"]:
            lines.append(
                f"  {rec['outcome']:<8}"
                f" {_fmt(rec['eigenvalue']):<15}"
                f" {_fmt(rec['derived']):<15}"
                f" {_fmt(rec['oracle']):<15}"
                f" {_fmt(rec['residual'])}"
            )
        audit_bits = []
        for name, audit in d["audits"].items():
            status = "ok" if audit["ok"] else "FAIL"
            audit_bits.append(f"{name}={status}({_fmt(audit['max_residual'])})")
        lines.append("  audits: " + " ".join(audit_bits))
    if "mixtures" in report:
        m = report["mixtures"]
        lines.append(
            f"  equivalence over {m['trials']} random projectors: "
            f"max residual {_fmt(m['max_equivalence_residual'])}"
        )
    if "sampling" in report and report["sampling"] is not None:
        s = report["sampling"]
        lines.append(f"  sampling: N={s['n']} seed={s['seed']}")
        lines.append(f"  counts:   {'  '.join(str(c) for c in s['counts'])}")
        lines.append(f"  z-scores: {'  '.join(_fmt(z) for z in s['zscores'])}")
    lines.append("PASS" if report.get("pass") else "FAIL")
    return "\n".join(lines) + "\n"


# -- argument parsing and dispatch ----------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="envborn",
        description="Audit premeasurement scenarios against the trace rule.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("files", nargs="+", help="scenario file(s), JSON")
        p.add_argument("--tolerance", type=float, default=None, help="operator tolerance override")
        p.add_argument("--seed", type=int, default=None, help="audit seed override")
        p.add_argument("--trials", type=int, default=None, help="mixture trials override")
        p.add_argument(
            "--format",
            choices=("text", "structured"),
            default="text",
            help="report format (default text)",
        )
        p.add_argument("--out", default=None, help="also write the report to this path")
        p.add_argument(
            "--fail-fast",
            action="store_true",
            help="stop at the first failing section or file",
        )

    for name, doc in (
        ("schmidt", "decompose a composite state"),
        ("derive", "run the derivation pipeline with audits"),
        ("mixtures", "proper/improper mixture equivalence"),
        ("sample", "derive then sample ensemble frequencies"),
    ):
        add_common(sub.add_parser(name, help=doc))

    rp = sub.add_parser("report", help="pretty-print a structured report file")
    rp.add_argument("files", nargs="+", help="report file(s), JSON")
    return parser


def _run_one(command: str, path: str, args, default_tol: float | None) -> tuple[dict, int]:
    scenario = load_scenario(
        path, default_operator_tol=default_tol if default_tol is not None else DEFAULT_TOL
    )
    scenario = _apply_overrides(scenario, args)
    if command == "schmidt":
        report = run_schmidt(scenario)
    elif command == "derive":
        report = run_derive(scenario)
    elif command == "mixtures":
        report = run_mixtures(scenario)
    elif command == "sample":
        report = run_sample(scenario, fail_fast=args.fail_fast)
    else:  # pragma: no cover
        raise AssertionError(command)
    return report, EXIT_PASS if report["pass"] else EXIT_VERIFICATION


def _emit(text: str, out_path: str | None) -> None:
    sys.stdout.write(text)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    tol_env = os.environ.get(_ENV_TOLERANCE)
    default_tol = None
    if tol_env is not None:
        try:
            default_tol = float(tol_env)
        except ValueError:
            print(f"invalid {_ENV_TOLERANCE}={tol_env!r}", file=sys.stderr)
            return EXIT_INPUT

    args = _build_parser().parse_args(argv)

    if args.command == "report":
        code = EXIT_PASS
        for path in args.files:
            try:
                report = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                print(f"error: cannot read report {path}: {exc}", file=sys.stderr)
                return EXIT_INPUT
            if report.get("schema_version") != SCHEMA_VERSION:
                print(
                    f"error: {path} has unsupported schema "
                    f"{report.get('schema_version')!r}",
                    file=sys.stderr,
                )
                return EXIT_INPUT
            sys.stdout.write(render_text(report))
            if not report.get("pass"):
                code = max(code, EXIT_VERIFICATION)
        return code

    reports = []
    code = EXIT_PASS
    for path in args.files:
        try:
            report, file_code = _run_one(args.command, path, args, default_tol)
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        reports.append(report)
        code = max(code, file_code)
        if args.fail_fast and file_code != EXIT_PASS:
            break

    if args.format == "structured":
        payload = reports[0] if len(reports) == 1 else reports
        text = _dump(payload) if isinstance(payload, dict) else (
            json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
        )
    else:
        text = "".join(render_text(r) for r in reports)
    _emit(text, args.out)
    return code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
