"""``tomrep`` command line.

Exit codes: 0 success, 2 usage or parse error, 3 numerical-quality failure.
Output is deterministic: floats are written with the shortest repr that
round-trips, JSON keys keep insertion order.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from tomrep import __version__, evolution, qubit, states, tomography, transitions
from tomrep.coin_rep import coins_from_density
from tomrep.errors import AccuracyError, DivergenceError, TomrepError
from tomrep.special_math import AdaptiveConfig, integrate_line

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

CONVENTIONS = (
    "units hbar=m=omega=1; w(X|mu,nu) is the density of mu*q+nu*p; "
    "Gaussian tomograms exp(-(X-Xbar)^2/(2*sigma))/sqrt(2*pi*sigma) with sigma a variance; "
    "coins p1=1/2+Re rho_nn', p2=1/2-Im rho_nn' (n<n'), p3=rho_nn"
)

# cross-method tolerance against the Born value
METHOD_TOL = {"born": 0.0, "gaussian-closed": 1e-6, "tomographic": 1e-4}


class UsageError(Exception):
    pass


# --- parsing helpers -------------------------------------------------------------


def parse_state(text: str) -> states.StateSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"state is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("state must be a JSON object")
    try:
        return states.parse_state_spec(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad state spec: {exc}") from None


def parse_frames(text: str) -> list[tomography.ReferenceFrame]:
    """``circle:k`` or ``mu,nu[;mu,nu...]``."""
    try:
        if text.startswith("circle:"):
            k = int(text.split(":", 1)[1])
            if k < 1:
                raise ValueError("need k >= 1")
            return [
                tomography.ReferenceFrame(math.cos(2 * math.pi * j / k), math.sin(2 * math.pi * j / k))
                for j in range(k)
            ]
        frames = []
        for part in text.split(";"):
            mu, nu = (float(v) for v in part.split(","))
            frames.append(tomography.ReferenceFrame(mu, nu))
        return frames
    except (ValueError, TomrepError) as exc:
        raise UsageError(f"bad frame spec {text!r}: {exc}") from None


def parse_range(text: str) -> np.ndarray:
    """``a:b:n`` -> n points from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        n = int(n)
        if n < 1:
            raise ValueError("need n >= 1")
        return np.linspace(float(a), float(b), n)
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}: {exc}") from None


def parse_floats(text: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} numbers, got {len(vals)}")
    return vals


def thread_cap() -> int | None:
    """TOMREP_THREADS, validated. Computation is single-threaded regardless."""
    raw = os.environ.get("TOMREP_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"TOMREP_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("TOMREP_THREADS must be >= 1")
    return n


def load_matrix(path: str) -> np.ndarray:
    """JSON file holding [[[re, im], ...], ...] or [[re, ...], ...]."""
    try:
        data = json.loads(Path(path).read_text())
        arr = np.asarray(data, dtype=float)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read matrix {path}: {exc}") from None
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise UsageError("matrix must be square")
    return arr.astype(complex)


# --- output helpers --------------------------------------------------------------


def fmt(x) -> str:
    return repr(float(x))


def cplx(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def matrix_json(m) -> list:
    return [[cplx(v) for v in row] for row in np.asarray(m)]


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def emit_json(obj, out: str | None) -> None:
    emit(json.dumps(obj, indent=2, allow_nan=False) + "\n", out)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {CONVENTIONS}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# --- commands --------------------------------------------------------------------


def cmd_tomogram(args) -> int:
    spec = parse_state(args.state)
    frames = parse_frames(args.frames)
    X = parse_range(args.X)
    tom = tomography.tomogram_for_state(spec, args.method)
    rows = []
    cfg = AdaptiveConfig(atol=1e-12)
    for f in frames:
        w = np.atleast_1d(tom.evaluate(X, f.mu, f.nu))
        rows.extend((x, f.mu, f.nu, v) for x, v in zip(X, w))
        norm = integrate_line(lambda y: tom.evaluate(y, f.mu, f.nu), cfg).value
        print(f"frame mu={fmt(f.mu)} nu={fmt(f.nu)} normalization residual {abs(norm - 1.0):.3e}", file=sys.stderr)
    emit(csv_text(["X", "mu", "nu", "w"], rows), args.output)
    return EXIT_OK


def read_grid(path: str) -> tomography.GridTomogram:
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
        reader = csv.DictReader(lines)
        cols = {k: [] for k in ("X", "mu", "nu", "w")}
        for row in reader:
            for k in cols:
                cols[k].append(float(row[k]))
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read tomogram grid {path}: {exc}") from None
    try:
        return tomography.GridTomogram(cols["X"], cols["mu"], cols["nu"], cols["w"])
    except (ValueError, TomrepError) as exc:
        raise UsageError(f"bad tomogram grid: {exc}") from None


def cmd_reconstruct(args) -> int:
    if args.N < 2:
        raise UsageError("N must be at least 2")
    if args.tol <= 0:
        raise UsageError("tolerance must be positive")
    if (args.state is None) == (args.grid is None):
        raise UsageError("give exactly one of --state or --grid")
    if args.state is not None:
        spec = parse_state(args.state)
        tom = tomography.tomogram_for_state(spec, args.method)
    else:
        tom = read_grid(args.grid)
    cfg = tomography.ReconstructionConfig(s_max=args.s_max, analytic_inner=args.state is not None)
    res = tomography.density_from_tomogram(tom, args.N, cfg, check=False)
    if args.grid is not None:
        # linear interpolation error is O(h^2): |rho_h - rho_2h| / 3 estimates it
        coarse = tomography.density_from_tomogram(tom.coarsened(), args.N, cfg, check=False)
        interp = float(np.max(np.abs(res.rho - coarse.rho))) / 3.0
        res = dataclasses.replace(res, quadrature_error=res.quadrature_error + interp)
    rho = 0.5 * (res.rho + res.rho.conj().T)
    try:
        coins = coins_from_density(rho, tol=max(args.tol, 1e-9)).to_json()
    except TomrepError as exc:
        # an inaccurate rho may not be representable; the residuals below say why
        print(f"coins unavailable: {exc}", file=sys.stderr)
        coins = None
    doc = {
        "conventions": CONVENTIONS,
        "N": args.N,
        "rho": matrix_json(res.rho),
        "coins": coins,
        "residuals": {
            "trace": res.trace_residual,
            "hermiticity": res.hermiticity_residual,
            "quadrature": res.quadrature_error,
        },
    }
    emit_json(doc, args.output)
    worst = max(res.hermiticity_residual, res.quadrature_error)
    if args.state is not None:
        worst = max(worst, res.trace_residual)
    if worst > args.tol:
        print(f"residual {worst:.3e} exceeds tolerance {args.tol:.3e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _hamiltonian(args, N: int | None) -> evolution.HamiltonianMatrix:
    if args.hamiltonian:
        m = load_matrix(args.hamiltonian)
        try:
            return evolution.HamiltonianMatrix(m.shape[0], m)
        except (ValueError, TomrepError) as exc:
            raise UsageError(str(exc)) from None
    if args.qubit:
        return evolution.qubit_hamiltonian()
    if N is None or N < 2:
        raise UsageError("oscillator Hamiltonian needs --N >= 2")
    return evolution.oscillator_hamiltonian(N)


def cmd_evolve(args) -> int:
    if args.step <= 0 or args.every < 1:
        raise UsageError("step must be positive and --every >= 1")
    if args.probs is not None:
        args.qubit = True
        try:
            rho0 = qubit.density_from_probs(qubit.QubitProbabilities(*parse_floats(args.probs, 3)))
        except (ValueError, TomrepError) as exc:
            raise UsageError(str(exc)) from None
        H = _hamiltonian(args, 2)
    elif args.state is not None:
        H = _hamiltonian(args, args.N)
        rho0 = states.density_matrix(parse_state(args.state), H.N)
    else:
        raise UsageError("give --state or --probs")
    if H.N != rho0.shape[0]:
        raise UsageError("state dimension does not match Hamiltonian")
    if args.method == "kinetic":
        traj = evolution.kinetic_evolve(rho0, H, (0.0, args.t_end), args.step)
        times, pis = traj.times, traj.coins()
    else:
        system = evolution.affine_system(H)
        times, pis = system.evolve(evolution.pi_from_density(rho0), (0.0, args.t_end), args.step)
    keep = list(range(0, len(times), args.every))
    if keep[-1] != len(times) - 1:
        keep.append(len(times) - 1)
    rows = ([times[i], *pis[i]] for i in keep)
    emit(csv_text(["t", *evolution.pair_labels(H.N)], rows), args.output)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    H = _hamiltonian(args, args.N)
    out = [{"energy": s.energy, "pi": [float(v) for v in s.pi]} for s in evolution.stationary_spectrum(H)]
    emit_json(out, args.output)
    return EXIT_OK


def cmd_transition(args) -> int:
    a, b = parse_state(args.a), parse_state(args.b)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHOD_TOL]
    if bad or not methods:
        raise UsageError(f"unknown methods {bad}; choose from {sorted(METHOD_TOL)}")
    results = {}
    for m in methods:
        if m == "born":
            r = transitions.born_probability(a, b)
        elif m == "tomographic":
            r = transitions.tomographic_transition(
                tomography.tomogram_for_state(a), tomography.tomogram_for_state(b)
            )
        else:
            ga, gb = states.as_gaussian(a), states.as_gaussian(b)
            if ga is None or gb is None:
                raise UsageError("gaussian-closed needs two Gaussian states")
            r = transitions.gaussian_transition(ga, gb)
        results[m] = r
    deltas, failed = {}, False
    for i, m1 in enumerate(methods):
        for m2 in methods[i + 1 :]:
            d = abs(results[m1].probability - results[m2].probability)
            tol = args.tol if args.tol is not None else max(METHOD_TOL[m1], METHOD_TOL[m2])
            deltas[f"{m1}-{m2}"] = {"delta": d, "tolerance": tol}
            failed |= d > tol
    doc = {
        "a": states.spec_to_json(a),
        "b": states.spec_to_json(b),
        "methods": {
            m: {"probability": r.probability, "error": float(r.error), "imag_residual": r.imag_residual}
            for m, r in results.items()
        },
        "deltas": deltas,
    }
    emit_json(doc, args.output)
    if failed:
        print("cross-method delta exceeds tolerance", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_qubit(args) -> int:
    try:
        p = qubit.QubitProbabilities(*parse_floats(args.probs, 3))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cls = qubit.classify_state(p)
    rho = qubit.density_from_probs(p, tol=math.inf)
    b = qubit.bloch_from_probs(p)
    try:
        ang = qubit.angles_from_probs(p)
        angles = {"phi": ang.phi, "theta": ang.theta}
    except TomrepError:
        angles = None
    doc = {
        "probs": [p.p1, p.p2, p.p3],
        "density": matrix_json(rho),
        "eigenvalues": [float(v) for v in np.linalg.eigvalsh(rho)],
        "bloch": [b.x, b.y, b.z],
        "angles": angles,
        "classification": {"kind": cls.kind.value, "purity": cls.purity, "radius_sq": cls.radius_sq},
    }
    emit_json(doc, args.output)
    return EXIT_OK


# --- entry point -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tomrep", description="Symplectic tomograms and coin representation of oscillator states.")
    p.add_argument("--version", action="version", version=f"tomrep {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("tomogram", help="tabulate w(X|mu,nu) to CSV")
    t.add_argument("--state", required=True, help="state spec JSON")
    t.add_argument("--frames", default="circle:8", help="circle:k or mu,nu[;mu,nu...]")
    t.add_argument("--X", default="-6:6:121", help="a:b:n")
    t.add_argument("--method", choices=["closed", "quadrature"], default="closed")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_tomogram)

    r = sub.add_parser("reconstruct", help="density matrix and coins from a tomogram")
    r.add_argument("--state", help="analytic state spec JSON")
    r.add_argument("--grid", help="tomogram CSV from the tomogram command")
    r.add_argument("--N", type=int, default=8)
    r.add_argument("--method", choices=["closed", "quadrature"], default="closed")
    r.add_argument("--s-max", type=float, default=10.0)
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_reconstruct)

    def hamiltonian_opts(q):
        g = q.add_mutually_exclusive_group()
        g.add_argument("--oscillator", action="store_true", help="H = diag(1/2 + n) (default)")
        g.add_argument("--qubit", action="store_true", help="H = diag(1/2, -1/2)")
        g.add_argument("--hamiltonian", help="JSON matrix file")
        q.add_argument("--N", type=int, default=None)

    e = sub.add_parser("evolve", help="coin trajectory CSV")
    hamiltonian_opts(e)
    e.add_argument("--state", help="state spec JSON (projected onto N Fock states)")
    e.add_argument("--probs", help="qubit coins p1,p2,p3")
    e.add_argument("--t-end", type=float, default=2 * math.pi)
    e.add_argument("--step", type=float, default=1e-3)
    e.add_argument("--every", type=int, default=100, help="write every k-th step")
    e.add_argument("--method", choices=["kinetic", "affine"], default="kinetic")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_evolve)

    s = sub.add_parser("spectrum", help="stationary coin vectors and energies")
    hamiltonian_opts(s)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_spectrum)

    x = sub.add_parser("transition", help="transition probability by several methods")
    x.add_argument("--a", required=True)
    x.add_argument("--b", required=True)
    x.add_argument("--methods", default="born,tomographic")
    x.add_argument("--tol", type=float, default=None, help="override cross-method tolerance")
    x.add_argument("-o", "--output")
    x.set_defaults(func=cmd_transition)

    q = sub.add_parser("qubit", help="density, Bloch vector, angles and class of qubit coins")
    q.add_argument("--probs", required=True, help="p1,p2,p3")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_qubit)
    return p


# value-taking flags whose values may begin with "-" (negative ranges, frames)
_SIGNED_VALUE_FLAGS = ("--X", "--frames")


def _join_signed_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _SIGNED_VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_signed_values(argv))
    try:
        thread_cap()
        return args.func(args)
    except UsageError as exc:
        print(f"tomrep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AccuracyError, DivergenceError, TomrepError, ArithmeticError) as exc:
        print(f"tomrep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader closed stdout early; silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
