"""Command-line entry point: ``jostkit <command> --input FILE [options]``.

Exit codes: 0 success, 1 input/output or parse error, 2 validation error.
Results and diagnostic reports are written as JSON to ``--output`` (or
stdout); ``--table`` additionally writes a CSV table.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import JostError, SchemaError
from .forward import (
    JacobiParams,
    boundary_identity_check,
    jost_tail_limit,
    sturm_count,
)
from .inverse import (
    MFunction,
    SpectralData,
    canonical_weight,
    canonicity_check,
    decay_rate_estimate,
    normalization_check,
    recover_jacobi,
)
from .io import parse_input, write_csv, write_output
from .numerics import CircleGrid, ToleranceConfig, find_real_zeros, radius_estimate
from .opuc import (
    VerblunskySeq,
    bernstein_szego_weight,
    dinv_coefficients,
    relative_szego,
    schur_forward,
    schur_inverse,
    szego_function,
    verblunsky_decay_check,
)

COMMANDS = ("forward", "invert", "weights", "decay", "opuc-check", "roundtrip")

EXIT_OK, EXIT_IO, EXIT_VALIDATION = 0, 1, 2


@dataclass
class JobSpec:
    """One CLI invocation."""

    command: str
    input_path: str
    output_path: Optional[str] = None
    table_path: Optional[str] = None
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    theta_points: int = 512
    strip_steps: int = 40
    r0: float = 0.25
    radius: Optional[float] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not self.input_path:
            raise ValueError("input path must be nonempty")


class ValidationFailure(Exception):
    """Carries a diagnostic report out of a command handler."""

    def __init__(self, report):
        super().__init__(report["diagnostics"][0]["message"])
        self.report = report


def _diagnostic(exc):
    entry = {"tag": getattr(exc, "tag", "error"), "message": str(exc)}
    for k, v in getattr(exc, "details", {}).items():
        if isinstance(v, (int, float, str, list, tuple)):
            entry[k] = v
    return entry


def _expect(obj, kind, command):
    if not isinstance(obj, kind):
        raise SchemaError(f"command {command!r} needs {kind.__name__} input")
    return obj


def _states_out(states):
    return [{"z": s.z, "energy": s.energy, "weight": s.weight, "residue": s.residue} for s in states]


def _forward(job, J):
    tol = job.tolerances
    u, bound = jost_tail_limit(J)
    data = SpectralData.from_jacobi(J, root_tol=tol.root_tol)
    theta = np.linspace(0.0, math.pi, 64)
    out = {
        "jost": {"coeffs": u.coeffs, "degree": u.degree, "radius": u.radius, "tail_bound": bound},
        "bound_states": _states_out(data.states),
        "boundary_identity_deviation": boundary_identity_check(J, theta),
        "normalization_deviation": normalization_check(data, job.theta_points),
    }
    if J.is_free_tail:
        above, below = sturm_count(J)
        out["sturm_count"] = {"above": above, "below": below}
    if job.table_path:
        mf = MFunction(data, job.theta_points)
        th = np.linspace(0.0, math.pi, job.theta_points)
        z = np.exp(1j * th)
        uz = u(z)
        write_csv(job.table_path, ["theta", "f", "re", "im"],
                  zip(th, mf.density(th), uz.real, uz.imag))
    return out


def _check_canonical_existence(data):
    for s in data.states:
        if 1.0 / abs(s.z) < data.u.radius:
            canonical_weight(data.u, s.z)


def _strip(job, data, N):
    R, diag = recover_jacobi(data, N, job.theta_points, job.r0, R_work=job.radius, tol=job.tolerances)
    return R, diag


def _strip_report(R, diag):
    return {
        "a": R.a,
        "b": R.b,
        "steps": diag.steps,
        "terminated_at": diag.terminated_at,
        "seminorms": diag.seminorms,
        "u_at_zero": diag.u_at_zero,
        "sup_nsharp": diag.sup_nsharp,
        "negative_mode_fraction": diag.negative_mode_fraction,
        "contraction_ok": diag.contraction_ok,
    }


def _invert(job, data):
    tol = job.tolerances
    # existence of canonical weights first: a Jost function that admits none
    # cannot come from a Jacobi matrix, whatever the weights say
    _check_canonical_existence(data)
    data.validate(tol, job.theta_points)
    R_work = job.radius or (3.0 if data.u.is_polynomial else 1.0 + 0.5 * (data.u.radius - 1.0))
    report = canonicity_check(data, R_work, tol.residue_tol)
    bad = [e for e in report if not e.is_canonical]
    R, diag = _strip(job, data, job.strip_steps)
    out = _strip_report(R, diag)
    out["canonicity"] = [
        {"z": e.z, "canonical": e.is_canonical, "deviation": e.deviation, "canonical_weight": e.canonical_weight}
        for e in report
    ]
    if job.table_path:
        rows = [(n + 1, R.a[n], R.b[n], diag.seminorms[n + 1] if n + 1 < len(diag.seminorms) else math.nan)
                for n in range(R.K)]
        write_csv(job.table_path, ["n", "a", "b", "seminorm"], rows)
    diagnostics = [
        {"tag": "canonical-weight", "message": f"weight at z={e.z!r} is not canonical", "z": e.z,
         "deviation": e.deviation}
        for e in bad
    ]
    if diag.analyticity_loss:
        diagnostics.append({"tag": "analyticity-loss", **diag.analyticity_loss})
    if diagnostics:
        raise ValidationFailure({"status": "invalid", "diagnostics": diagnostics, "partial": out})
    return out


def _weights(job, data):
    tol = job.tolerances
    given = {s.z: s for s in data.states}
    entries, diagnostics = [], []
    for z in find_real_zeros(data.u, (-1 + 1e-9, 1 - 1e-9), tol.root_tol):
        entry = {"z": z, "energy": z + 1 / z}
        try:
            res = canonical_weight(data.u, z)
        except JostError as exc:
            diagnostics.append(_diagnostic(exc))
            entries.append(entry)
            continue
        w = (1 - 1 / z**2) * res
        entry.update(canonical_residue=res, canonical_weight=w)
        if w <= 0:
            diagnostics.append({"tag": "negative-canonical-weight",
                                "message": f"canonical weight at z={z!r} is {w!r}", "z": z})
        match = [s for gz, s in given.items() if abs(gz - z) <= 1e-9]
        if match:
            entry["given_weight"] = match[0].weight
            entry["deviation"] = abs(match[0].weight - w)
        entries.append(entry)
    out = {"zeros": entries}
    if any(d["tag"] == "canonical-weight" for d in diagnostics):
        raise ValidationFailure({"status": "invalid", "diagnostics": diagnostics, "partial": out})
    out["diagnostics"] = diagnostics
    return out


def _decay(job, J):
    u, bound = jost_tail_limit(J)
    data = SpectralData.from_jacobi(J, root_tol=job.tolerances.root_tol)
    steps = min(job.strip_steps, max(J.K, 1))
    R, diag = _strip(job, data, steps)
    out = {
        "jost_radius_estimate": math.inf if u.is_polynomial and J.is_free_tail else radius_estimate(u.coeffs),
        "input_decay_rate": decay_rate_estimate(J),
        "stripped_decay_rate": decay_rate_estimate(JacobiParams(R.a, R.b)),
        "strip": _strip_report(R, diag),
    }
    if job.table_path:
        write_csv(job.table_path, ["n", "a", "b"], [(n + 1, R.a[n], R.b[n]) for n in range(R.K)])
    return out


def _opuc_check(job, seq):
    tol = job.tolerances
    L = len(seq)
    al = seq.alphas
    f0 = schur_forward(seq)
    recovered = schur_inverse(f0, max(L - 1, 0)).alphas if L else np.array([])
    z = CircleGrid.nodes(0.5, 16)
    w = bernstein_szego_weight(seq)
    D = szego_function(w, z)
    prod = np.ones_like(z)
    for n in range(L):
        prod = prod * relative_szego(seq[n], schur_forward(seq, None, n), schur_forward(seq, None, n + 1), z)
    szego_dev = abs(szego_function(w, 0.0).real ** 2 - float(np.prod(1 - np.abs(al) ** 2)))
    out = {
        "length": L,
        "schur_roundtrip_error": float(np.max(np.abs(recovered - al))) if L else 0.0,
        "telescoping_deviation": float(np.max(np.abs(prod - D))),
        "szego_theorem_deviation": szego_dev,
    }
    if L >= 8:
        c = dinv_coefficients(seq, L - 1)
        nonzero = np.count_nonzero(np.abs(c[(L - 1) // 2 + 1:]) > 0)
        radius = math.inf if nonzero == 0 else radius_estimate(c)
        R_est, passed = verblunsky_decay_check(seq, radius)
        out["decay_check"] = {"R_est": R_est, "dinv_radius": radius, "passed": passed}
    failures = [k for k in ("schur_roundtrip_error", "telescoping_deviation", "szego_theorem_deviation")
                if out[k] > tol.roundtrip_tol]
    if failures:
        raise ValidationFailure({"status": "invalid", "partial": out, "diagnostics": [
            {"tag": "opuc-identity", "message": f"{k} = {out[k]!r} exceeds {tol.roundtrip_tol!r}"} for k in failures]})
    return out


def _roundtrip(job, J):
    tol = job.tolerances
    data = SpectralData.from_jacobi(J, root_tol=tol.root_tol)
    N = max(job.strip_steps, J.K + 2)
    R, diag = _strip(job, data, N)
    if diag.analyticity_loss:
        raise ValidationFailure({"status": "invalid", "diagnostics": [{"tag": "analyticity-loss", **diag.analyticity_loss}]})
    K = J.K
    a_true, b_true = J.entries(R.K)
    err_in = float(np.max(np.abs(np.r_[R.a[:K] - a_true[:K], R.b[:K] - b_true[:K]]), initial=0.0))
    err_out = float(np.max(np.abs(np.r_[R.a[K:] - a_true[K:], R.b[K:] - b_true[K:]]), initial=0.0))
    out = {"max_parameter_error": err_in, "max_tail_error": err_out, "steps": diag.steps,
           "terminated_at": diag.terminated_at, "tolerance": tol.roundtrip_tol}
    if max(err_in, err_out) > tol.roundtrip_tol:
        raise ValidationFailure({"status": "invalid", "partial": out, "diagnostics": [
            {"tag": "roundtrip", "message": f"parameter error {max(err_in, err_out)!r} exceeds {tol.roundtrip_tol!r}"}]})
    return out


_HANDLERS = {
    "forward": (JacobiParams, _forward),
    "invert": (SpectralData, _invert),
    "weights": (SpectralData, _weights),
    "decay": (JacobiParams, _decay),
    "opuc-check": (VerblunskySeq, _opuc_check),
    "roundtrip": (JacobiParams, _roundtrip),
}


def run(job, stdout=None, stderr=None):
    """Execute ``job`` and return its exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        obj = parse_input(job.input_path)
        kind, handler = _HANDLERS[job.command]
        _expect(obj, kind, job.command)
    except SchemaError as exc:
        where = f" (line {exc.details['line']})" if exc.details.get("line") else ""
        print(f"jostkit: schema error{where}: {exc}", file=stderr)
        return EXIT_IO
    except (OSError, UnicodeDecodeError) as exc:
        print(f"jostkit: cannot read input: {exc}", file=stderr)
        return EXIT_IO
    try:
        result = handler(job, obj)
        report = {"command": job.command, "status": "ok", "result": result}
        code = EXIT_OK
    except ValidationFailure as exc:
        report = {"command": job.command, **exc.report}
        code = EXIT_VALIDATION
    except JostError as exc:
        report = {"command": job.command, "status": "invalid", "diagnostics": [_diagnostic(exc)]}
        code = EXIT_VALIDATION
    if code != EXIT_OK:
        for d in report["diagnostics"]:
            print(f"jostkit: [{d['tag']}] {d['message']}", file=stderr)
    try:
        write_output(report, job.output_path, stdout)
    except OSError as exc:
        print(f"jostkit: cannot write output: {exc}", file=stderr)
        return EXIT_IO
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="jostkit", description="Jost functions, coefficient stripping and OPUC checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", required=True, help="JSON input file")
    p.add_argument("--output", help="JSON output file (default: stdout)")
    p.add_argument("--table", help="optional CSV table output")
    p.add_argument("--theta-points", type=int, default=512, help="base quadrature size on [0, pi]")
    p.add_argument("--strip-steps", type=int, default=40, help="number of stripping steps")
    p.add_argument("--r0", type=float, default=0.25, help="circle radius for Taylor extraction of M")
    p.add_argument("--radius", type=float, help="working radius for the analyticity check")
    p.add_argument("--tol-root", type=float, default=1e-12)
    p.add_argument("--tol-residue", type=float, default=1e-8)
    p.add_argument("--tol-roundtrip", type=float, default=1e-7)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        tol = ToleranceConfig(root_tol=args.tol_root, residue_tol=args.tol_residue,
                              roundtrip_tol=args.tol_roundtrip, quad_points=args.theta_points)
        if args.strip_steps < 0 or not args.r0 > 0 or (args.radius is not None and not args.radius > 1):
            raise ValueError("--strip-steps must be >= 0, --r0 > 0 and --radius > 1")
        job = JobSpec(args.command, args.input, args.output, args.table, tol,
                      args.theta_points, args.strip_steps, args.r0, args.radius)
    except ValueError as exc:
        print(f"jostkit: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
