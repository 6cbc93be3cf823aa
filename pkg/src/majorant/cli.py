"""Command-line front end for the realization pipeline.

Subcommands map one-to-one onto library entry points: ``check`` evaluates
feasibility without solving, ``realize`` runs the full pipeline and writes a
result file, ``schur-horn`` routes self-adjoint data to the pinching
constructor, ``convergence`` sweeps one instance across resolutions, and
``suite`` runs a compact self-check battery.

Exit codes are a function of the verdict only: 0 for success or feasible,
2 for infeasible, 3 for a violated precondition, 64 for malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .errors import Infeasible, PreconditionError
from .matrixmodel import (
    DiagonalElement,
    FactorElement,
    in_two_sided_orbit,
    singular_profile,
)
from .profile import DEFAULT_TOL, StepProfile, partial_integral, submajorizes
from .schurhorn import SchurHornInstance, realize_schur_horn
from .thompson import RealizationResult, StageTrace, ThompsonInstance, general_solve

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_PRECONDITION = 3
EXIT_USAGE = 64

_MODES = ("check", "realize", "schur-horn", "convergence", "suite")


class MalformedInput(Exception):
    """Problem file fails schema validation."""


def _fail(message: str) -> MalformedInput:
    return MalformedInput(message)


def _parse_scalar(value, label: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(p, (int, float)) for p in value
    ):
        return complex(value[0], value[1])
    raise _fail(f"{label} entries must be numbers or [re, im] pairs")


def _parse_vector(data, label: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise _fail(f"{label} must be a non-empty list")
    return np.array([_parse_scalar(v, label) for v in data], dtype=np.complex128)


def _parse_matrix(data) -> FactorElement:
    if isinstance(data, dict):
        try:
            return FactorElement.from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise _fail(f"bad matrix object for T: {exc}") from None
    if isinstance(data, list) and data and all(isinstance(r, list) for r in data):
        n = len(data)
        if any(len(r) != n for r in data):
            raise _fail("T matrix rows must all have the same length")
        rows = [[_parse_scalar(v, "T") for v in r] for r in data]
        return FactorElement(np.array(rows, dtype=np.complex128))
    raise _fail("T must be a matrix object or a square nested list")


def load_problem(path: str) -> dict:
    """Parse and schema-check a problem file; raises MalformedInput."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise _fail(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise _fail(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise _fail("problem file must be a JSON object")
    known = {"A", "T", "strategy", "tol", "mode", "resolutions"}
    unknown = set(raw) - known
    if unknown:
        raise _fail(f"unknown problem fields: {sorted(unknown)}")
    problem: dict = {}
    if "A" not in raw or "T" not in raw:
        raise _fail("problem file needs both A and T")
    problem["A"] = _parse_vector(raw["A"], "A")
    t_raw = raw["T"]
    if isinstance(t_raw, list) and t_raw and not isinstance(t_raw[0], list):
        problem["T_pattern"] = _parse_vector(t_raw, "T")
        problem["T"] = None
    else:
        problem["T"] = _parse_matrix(t_raw)
        problem["T_pattern"] = None
    strategy = raw.get("strategy", "partition")
    if strategy not in ("partition", "multiplicative"):
        raise _fail("strategy must be 'partition' or 'multiplicative'")
    problem["strategy"] = strategy
    tol = raw.get("tol", DEFAULT_TOL)
    if not isinstance(tol, (int, float)) or not 0.0 < float(tol) < 1.0:
        raise _fail("tol must be a number in (0, 1)")
    problem["tol"] = float(tol)
    mode = raw.get("mode")
    if mode is not None and mode not in _MODES:
        raise _fail(f"mode must be one of {_MODES}")
    problem["mode"] = mode
    return problem


def _require_matrix(problem: dict) -> FactorElement:
    if problem["T"] is None:
        raise _fail("this mode needs T as a full matrix, not a pattern")
    return problem["T"]


def _print(line: str) -> None:
    sys.stdout.write(line + "\n")


def cmd_check(problem: dict) -> int:
    """Evaluate both feasibility conditions and report them side by side."""
    T = _require_matrix(problem)
    a = np.abs(problem["A"])
    if a.size != T.n:
        raise _fail("A length must match the dimension of T")
    report = submajorizes(StepProfile(a), singular_profile(T), tol=problem["tol"])
    payload = {
        "ii1_feasible": bool(report.submajorized),
        "finite_feasible": bool(report.submajorized and report.thompson_finite_ok),
        "majorized": bool(report.majorized),
        "margins": [float(m) for m in report.margins],
        "trace_gap": float(report.trace_gap),
        "resolution": int(report.resolution),
        "tol": problem["tol"],
    }
    _print(json.dumps(payload, indent=2))
    return EXIT_OK if report.submajorized else EXIT_INFEASIBLE


def _default_output(input_path: str, suffix: str) -> Path:
    p = Path(input_path)
    return p.with_name(p.stem + suffix)


def _verify_roundtrip(out_path: Path, T: FactorElement, tol: float) -> None:
    data = json.loads(out_path.read_text())
    result = RealizationResult.from_json(data)
    product = result.U.entries @ T.entries @ result.V.entries
    gap = np.linalg.norm(product - result.S.entries) / np.sqrt(T.n)
    if gap > T.n * tol:
        raise RuntimeError(f"result file failed round-trip verification: gap {gap}")


def cmd_realize(problem: dict, input_path: str, output: str | None) -> int:
    """Run the full pipeline and write U, V, S, residuals, and the trace."""
    T = _require_matrix(problem)
    try:
        inst = ThompsonInstance(DiagonalElement(problem["A"]), T)
    except PreconditionError:
        raise
    except ValueError as exc:
        raise _fail(str(exc)) from None
    tol = problem["tol"]
    try:
        result = general_solve(inst, strategy=problem["strategy"], tol=tol)
    except Infeasible as exc:
        _print(f"infeasible: violating margin {exc.margin!r}")
        return EXIT_INFEASIBLE
    out_path = Path(output) if output else _default_output(input_path, ".result.json")
    out_path.write_text(json.dumps(result.to_json()) + "\n")
    _verify_roundtrip(out_path, T, tol)
    _print(
        f"realized: residual={result.diag_residual!r}, "
        f"truncation={result.truncation_error!r}, "
        f"stages={len(result.trace.stages)}"
    )
    return EXIT_OK


def cmd_schur_horn(problem: dict, input_path: str, output: str | None) -> int:
    """Route self-adjoint data to the pinching constructor."""
    T = _require_matrix(problem)
    a = problem["A"]
    if np.max(np.abs(a.imag)) > problem["tol"] * T.n:
        raise PreconditionError("schur-horn targets must be real")
    inst = SchurHornInstance(a.real, T)
    u, s = realize_schur_horn(inst, tol=problem["tol"])
    residual = float(np.max(np.abs(np.diagonal(s.entries) - a.real)))
    trace = StageTrace()
    trace.add("schur-horn", n=T.n, residual=residual)
    out_path = Path(output) if output else _default_output(input_path, ".result.json")
    payload = {
        "U": u.to_json(),
        "S": s.to_json(),
        "residual": residual,
        "trace": trace.to_dict(),
    }
    out_path.write_text(json.dumps(payload) + "\n")
    _print(f"realized: residual={residual!r}, truncation=0.0, stages=1")
    return EXIT_OK


def _parse_resolutions(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise _fail("--resolutions must be a comma-separated list of integers")
    if not values:
        raise _fail("--resolutions must name at least one resolution")
    for n in values:
        if n < 1 or n & (n - 1) != 0:
            raise _fail(f"resolution {n} is not a power of two")
    return values


def cmd_convergence(
    problem: dict, input_path: str, output: str | None, resolutions: str
) -> int:
    """Sweep the instance across resolutions and write the CSV table."""
    sizes = _parse_resolutions(resolutions)
    if problem["T_pattern"] is not None:
        t_pat = problem["T_pattern"]
        if np.max(np.abs(t_pat.imag)) > 0.0:
            raise _fail("T pattern values must be real")
        t_vals = t_pat.real
    else:
        t_vals = singular_profile(problem["T"]).values
    try:
        rows = oracle.resolution_convergence(
            problem["A"], t_vals, sizes, strategy=problem["strategy"], tol=problem["tol"]
        )
    except PreconditionError as exc:
        raise _fail(str(exc)) from None
    csv_text = oracle.convergence_csv(rows)
    if output:
        Path(output).write_text(csv_text)
        _print(f"wrote {len(rows)} rows to {output}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


def _suite_sweep(seed: int, tol: float) -> tuple[int, int]:
    sigma = (2.0, 1.0)
    band = 2.0 * oracle.search_tolerance_2x2(sigma, 60)
    vals = np.linspace(0.0, 3.3, 12)
    bad = total = 0
    for a1 in vals:
        for a2 in vals:
            total += 1
            pred = oracle.two_cell_feasible(sigma, (a1, a2), tol=tol)
            found = oracle.feasibility_search_2x2(sigma, (a1, a2), grid=60)
            if pred != found:
                hi, lo = max(a1, a2), min(a1, a2)
                near = abs(hi + lo - 3.0) <= band or abs(hi - lo - 1.0) <= band
                if not near:
                    bad += 1
    return bad, total


def cmd_suite(seed: int, tol: float) -> int:
    """Compact property battery over the oracle generators."""
    failures = 0
    total = 0

    def check(name: str, ok: bool) -> None:
        nonlocal failures, total
        _print(f"{'ok  ' if ok else 'FAIL'} {name}")
        total += 1
        failures += 0 if ok else 1

    for i, n in enumerate((4, 8, 16)):
        inst = oracle.gen_feasible(seed + i, n)
        check(f"feasible generator n={n}", inst.feasibility_report(tol).submajorized)
    bad = oracle.gen_infeasible(seed, 8)
    margin = float(bad.feasibility_report(tol).margins.min())
    check("infeasible generator certifies", margin <= -10.0 * tol)
    T = oracle.gen_feasible(seed + 7, 8).T
    ok = True
    for k in (1, 4, 8):
        bf = oracle.kyfan_bruteforce(T, k, samples=24, seed=seed)
        an = partial_integral(singular_profile(T), k / 8)
        ok = ok and bf <= an + tol and abs(bf - an) <= 1e-7
    check("brute-force functional matches analytic", ok)
    bad_pts, points = _suite_sweep(seed, tol)
    check(f"two-cell search agrees with predicate ({points} pts)", bad_pts == 0)
    inst = oracle.gen_feasible(seed + 11, 16)
    result = general_solve(inst, tol=tol)
    check(
        "end-to-end residual within truncation",
        result.diag_residual <= result.truncation_error + 16 * tol,
    )
    check("end-to-end orbit preserved", in_two_sided_orbit(result.S, inst.T, tol=1e-7))
    _print(f"suite: {total - failures} passed, {failures} failed")
    return EXIT_OK if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="majorant",
        description="Realize target diagonals of two-sided unitary orbits.",
        epilog="MAJORANT_THREADS caps kernel parallelism; "
        "MAJORANT_BACKEND selects numba or numpy kernels.",
    )
    parser.add_argument("command", choices=_MODES, help="operation to run")
    parser.add_argument("--input", help="problem file (JSON)")
    parser.add_argument("--output", help="result file path")
    parser.add_argument("--tol", type=float, help="override the problem tolerance")
    parser.add_argument(
        "--strategy",
        choices=("partition", "multiplicative"),
        help="override the dominance strategy",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for suite mode")
    parser.add_argument(
        "--resolutions",
        default="4,16,64,256",
        help="comma-separated dimensions for convergence mode",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            return cmd_suite(args.seed, args.tol if args.tol else DEFAULT_TOL)
        if not args.input:
            raise _fail(f"{args.command} needs --input")
        problem = load_problem(args.input)
        if args.tol is not None:
            if not 0.0 < args.tol < 1.0:
                raise _fail("tol must be in (0, 1)")
            problem["tol"] = args.tol
        if args.strategy:
            problem["strategy"] = args.strategy
        command = args.command
        if command == "realize" and problem["mode"] == "schur-horn":
            command = "schur-horn"
        if command == "check":
            return cmd_check(problem)
        if command == "realize":
            return cmd_realize(problem, args.input, args.output)
        if command == "schur-horn":
            return cmd_schur_horn(problem, args.input, args.output)
        return cmd_convergence(problem, args.input, args.output, args.resolutions)
    except MalformedInput as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except Infeasible as exc:
        sys.stderr.write(f"infeasible: violating margin {exc.margin!r}\n")
        return EXIT_INFEASIBLE
    except PreconditionError as exc:
        sys.stderr.write(f"precondition violated: {exc}\n")
        return EXIT_PRECONDITION


if __name__ == "__main__":
    raise SystemExit(main())
