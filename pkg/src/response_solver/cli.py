"""Batch front door: parse problem files, dispatch commands, emit results.

Problems and run configurations are JSON documents (schema in the README).
Every run writes a deterministic ``result.json`` (sorted keys, no
timestamps) plus ``metadata.json`` and, for solve commands, plot-ready CSV
spectra.  Exit codes: 0 success, 2 solver non-convergence, 3 certification
failure, 4 input error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .multipliers import EpsilonDomain, JordanBlock, LinearPart
from .ode import (
    OdeProblem,
    SolverConfig,
    analyticity_probe,
    geometric_fit_r2,
    low_regularity_solve,
    solve_fixed_point,
    sweep_epsilon,
    sweep_sigma_ladder,
)
from .pde import PdeProblem, pde_solve_fixed_point
from .spectral import (
    FourierField,
    NonlinearitySpec,
    NormSpec,
    SpectralLattice,
    check_nonresonance,
    log_weights,
    norm,
    truncation_tail_norm,
)
from .verification import (
    FAULT_NAMES,
    LiouvilleSpec,
    build_liouville,
    certify_bounds,
    make_witness_problem,
    nondiff_probe,
    scan_for_witnesses,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOCONV = 2
EXIT_CERT = 3
EXIT_INPUT = 4

SYMBOLIC_OMEGA = {
    "sqrt2": math.sqrt(2.0),
    "sqrt3": math.sqrt(3.0),
    "sqrt5": math.sqrt(5.0),
    "golden": (1.0 + math.sqrt(5.0)) / 2.0,
}

COMMANDS = (
    "solve-ode", "solve-pde", "sweep", "probe-analytic", "low-reg",
    "verify", "demo-liouville",
)


class InputError(ValueError):
    """Schema or invariant violation in a problem/config document."""


# ---------------------------------------------------------------------------
# problem files


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise InputError(f"{path}: missing field {key!r}")
    return doc[key]


def _parse_omega(raw, path: str) -> tuple[float, ...]:
    out = []
    for i, entry in enumerate(raw):
        if isinstance(entry, str):
            if entry in SYMBOLIC_OMEGA:
                out.append(SYMBOLIC_OMEGA[entry])
            else:
                try:
                    out.append(float(entry))
                except ValueError as exc:
                    raise InputError(f"{path}.omega[{i}]: {entry!r} is neither "
                                     f"symbolic {sorted(SYMBOLIC_OMEGA)} nor decimal") from exc
        else:
            out.append(float(entry))
    return tuple(out)


def _parse_nonlinearity(doc: dict, path: str) -> NonlinearitySpec:
    kind = doc.get("kind", "zero")
    if kind == "zero":
        return NonlinearitySpec.zero()
    if kind == "polynomial":
        coeffs = _require(doc, "coeffs", path)
        return NonlinearitySpec.polynomial(
            [tuple(map(float, row)) for row in coeffs],
            smallness=doc.get("smallness", "local"),
        )
    if kind == "piecewise_linear":
        return NonlinearitySpec.piecewise(
            _require(doc, "breakpoints", path), _require(doc, "slopes", path)
        )
    raise InputError(f"{path}.kind: unknown nonlinearity {kind!r}")


def _parse_forcing(terms: list, lat: SpectralLattice, path: str) -> FourierField:
    """Cosine/sine terms (k[, j], component, amplitude) placed symmetrically."""
    out = FourierField.zeros(lat)
    for i, term in enumerate(terms):
        tpath = f"{path}[{i}]"
        k = tuple(int(c) for c in _require(term, "k", tpath))
        if len(k) != lat.d:
            raise InputError(f"{tpath}.k: expected {lat.d} entries")
        if lat.has_space:
            j = int(_require(term, "j", tpath))
            if j == 0:
                raise InputError(f"{tpath}.j: spatial forcing terms need j != 0")
            mode = k + (j,)
        else:
            mode = k
        if all(c == 0 for c in mode):
            raise InputError(f"{tpath}: zero-mean forcing forbids the k = 0 term")
        comp = int(term.get("component", 0))
        if not 0 <= comp < lat.n:
            raise InputError(f"{tpath}.component: out of range")
        amp = float(_require(term, "amplitude", tpath))
        kind = term.get("waveform", "cos")
        vec = np.zeros(lat.n, dtype=complex)
        if kind == "cos":
            vec[comp] = amp / 2.0
            delta = {mode: vec, tuple(-c for c in mode): vec.copy()}
        elif kind == "sin":
            vec[comp] = amp / (2.0j)
            delta = {mode: vec, tuple(-c for c in mode): -vec}
        else:
            raise InputError(f"{tpath}.waveform: expected 'cos' or 'sin'")
        for m, v in delta.items():
            out = out + FourierField.from_modes(lat, {m: v})
    return out


def parse_problem(path: str | Path) -> OdeProblem | PdeProblem:
    """Load and validate a problem document.

    All invariants are checked at load time: zero-mean forcing, real nonzero
    spectrum, beta admissibility, and non-resonance on the working lattice
    (decimal omega entries are accepted but still must pass the scan).
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise InputError(f"problem file {path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc

    kind = _require(doc, "kind", str(path))
    d = int(_require(doc, "d", str(path)))
    K = int(_require(doc, "K", str(path)))
    omega = _parse_omega(_require(doc, "omega", str(path)), str(path))

    if kind == "ode":
        n = int(doc.get("n", 1))
        lat = SpectralLattice(d=d, K=K, omega=omega, n=n)
        value, kmin = check_nonresonance(lat.omega_array, 2 * K)
        if value <= 0.0:
            raise InputError(
                f"{path}: omega is resonant on the lattice, k={kmin} gives k.omega=0"
            )
        raw_a = np.asarray(_require(doc, "A", str(path)), dtype=float)
        if raw_a.size != n * n:
            raise InputError(f"{path}.A: expected {n * n} row-major entries, "
                             f"got {raw_a.size}")
        A = raw_a.reshape(n, n)
        jordan = None
        phi = None
        if "jordan" in doc:
            try:
                jordan = tuple(
                    JordanBlock(float(b["lambda"]), int(b["size"]),
                                float(b.get("p", 1.0)), float(b.get("q", 1.0)))
                    for b in doc["jordan"]
                )
            except (KeyError, ValueError) as exc:
                raise InputError(f"{path}.jordan: {exc}") from exc
        if "phi" in doc:
            raw_phi = np.asarray(doc["phi"], dtype=float)
            if raw_phi.size != n * n:
                raise InputError(f"{path}.phi: expected {n * n} row-major entries")
            phi = tuple(map(tuple, raw_phi.reshape(n, n)))
        try:
            linear = LinearPart(tuple(map(tuple, A.tolist())), jordan, phi)
            g_hat = _parse_nonlinearity(doc.get("nonlinearity", {"kind": "zero"}),
                                        f"{path}.nonlinearity")
            forcing = _parse_forcing(_require(doc, "forcing", str(path)), lat,
                                     f"{path}.forcing")
            return OdeProblem(lattice=lat, linear=linear, g_hat=g_hat, forcing=forcing)
        except (ValueError, ArithmeticError) as exc:
            raise InputError(f"{path}: {exc}") from exc

    if kind == "pde":
        J = int(_require(doc, "J", str(path)))
        beta = float(_require(doc, "beta", str(path)))
        lat = SpectralLattice(d=d, K=K, omega=omega, n=1, has_space=True, J=J)
        value, kmin = check_nonresonance(lat.omega_array, 2 * K)
        if value <= 0.0:
            raise InputError(
                f"{path}: omega is resonant on the lattice, k={kmin} gives k.omega=0"
            )
        try:
            forcing = _parse_forcing(_require(doc, "forcing", str(path)), lat,
                                     f"{path}.forcing")
            return PdeProblem(lattice=lat, beta=beta, forcing=forcing,
                              nonlinear=bool(doc.get("nonlinear", True)))
        except (ValueError, ArithmeticError) as exc:
            raise InputError(f"{path}: {exc}") from exc

    raise InputError(f"{path}.kind: expected 'ode' or 'pde', got {kind!r}")


def epsilon_domain_from(doc: dict, path: str) -> EpsilonDomain:
    kind = _require(doc, "kind", path)
    sigma = float(_require(doc, "sigma", path))
    if kind == "complex_cone":
        return EpsilonDomain.cone(sigma, float(_require(doc, "mu", path)))
    if kind == "real_annulus":
        return EpsilonDomain.annulus(sigma)
    raise InputError(f"{path}.kind: expected 'complex_cone' or 'real_annulus'")


# ---------------------------------------------------------------------------
# run configuration


@dataclasses.dataclass
class RunConfig:
    command: str
    problem: str | None
    solver: SolverConfig
    norm_spec: NormSpec
    output_dir: str
    seed: int
    jobs: int = 1
    inject_fault: str | None = None
    params: dict = dataclasses.field(default_factory=dict)

    @staticmethod
    def load(path: str | Path, overrides: dict | None = None) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise InputError(f"config file {path} does not exist") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
        overrides = overrides or {}
        command = _require(doc, "command", str(path))
        if command not in COMMANDS:
            raise InputError(f"{path}.command: unknown command {command!r}")
        solver_doc = doc.get("solver", {})
        nd = solver_doc.get("norm", {"rho": 0.0, "m": 0.0})
        norm_spec = NormSpec(float(nd.get("rho", 0.0)), float(nd.get("m", 0.0)))
        solver = SolverConfig(
            tol=float(solver_doc.get("tol", 1e-10)),
            max_iter=int(solver_doc.get("max_iter", 200)),
            ball_radius=float(solver_doc.get("ball_radius", math.inf)),
            norm=norm_spec,
        )
        problem = doc.get("problem")
        if problem is not None:
            problem = str((path.parent / problem).resolve()
                          if not os.path.isabs(problem) else problem)
        out_dir = overrides.get("out") or doc.get("output_dir", "runs/out")
        return RunConfig(
            command=command,
            problem=problem,
            solver=solver,
            norm_spec=norm_spec,
            output_dir=str(out_dir),
            seed=int(overrides.get("seed") if overrides.get("seed") is not None
                     else doc.get("seed", 0)),
            jobs=int(overrides.get("jobs") or doc.get("jobs", 1)),
            inject_fault=overrides.get("inject_fault") or doc.get("inject_fault"),
            params=doc.get("params", {}),
        )


# ---------------------------------------------------------------------------
# output documents


def _problem_hash(path: str | None) -> str:
    if path is None:
        return "none"
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _field_summary(field: FourierField, spec: NormSpec) -> dict:
    lat = field.lattice
    return {
        "lattice": {
            "d": lat.d, "K": lat.K, "n": lat.n,
            "has_space": lat.has_space, "J": lat.J,
            "omega": list(lat.omega),
        },
        "norm": {"rho": spec.rho, "m": spec.m, "value": norm(field, spec)},
        "max_abs_coefficient": field.max_abs(),
        "truncation_tail": truncation_tail_norm(field, spec),
    }


def write_spectrum_csv(field: FourierField, spec: NormSpec, out_dir: Path,
                       stem: str = "spectrum") -> None:
    """Index-sorted and magnitude-sorted coefficient tables."""
    lat = field.lattice
    logw = log_weights(lat, spec)
    axes = [lat.axis_modes(i) for i in range(lat.n_axes)]
    grids = np.meshgrid(*axes, indexing="ij")
    rows = []
    mags = np.sqrt(np.sum(np.abs(field.coeffs) ** 2, axis=-1))
    it = np.nditer(mags, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        c = field.coeffs[idx + (0,)]
        rows.append(
            [int(g[idx]) for g in grids]
            + [float(c.real), float(c.imag), float(mags[idx]),
               float(math.exp(min(logw[idx], 700.0)))]
        )
    header = [f"k{i+1}" for i in range(lat.d)] + (["j"] if lat.has_space else []) \
        + ["re", "im", "abs", "weight_rho_m"]
    by_index = sorted(rows, key=lambda r: r[:lat.n_axes])
    by_mag = sorted(rows, key=lambda r: -r[lat.n_axes + 2])
    for suffix, data in (("by_index", by_index), ("by_magnitude", by_mag)):
        with open(out_dir / f"{stem}_{suffix}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(data)


def emit(out_dir: str | Path, result: dict, metadata: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(
        json.dumps(result, sort_keys=True, indent=2, allow_nan=False) + "\n"
    )
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2) + "\n")


def _sanitize(obj):
    """Make a JSON tree strict-finite: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [_sanitize(obj.real), _sanitize(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


# ---------------------------------------------------------------------------
# commands


def _cmd_solve_ode(cfg: RunConfig, prob: OdeProblem, out: Path) -> tuple[int, dict]:
    eps = complex(cfg.params.get("epsilon", 0.05))
    U, rep = solve_fixed_point(eps, prob, cfg.solver)
    result = {
        "command": cfg.command,
        "report": rep.to_dict(),
        "solution": _field_summary(U, cfg.norm_spec),
        "ratio_fit_r2": geometric_fit_r2(rep.increments),
    }
    write_spectrum_csv(U, cfg.norm_spec, out)
    code = EXIT_OK if rep.status == "converged" else EXIT_NOCONV
    return code, result


def _cmd_solve_pde(cfg: RunConfig, prob: PdeProblem, out: Path) -> tuple[int, dict]:
    eps = complex(cfg.params.get("epsilon", 0.02))
    U, rep = pde_solve_fixed_point(eps, prob, cfg.solver)
    result = {
        "command": cfg.command,
        "report": rep.to_dict(),
        "solution": _field_summary(U, cfg.norm_spec),
    }
    write_spectrum_csv(U, cfg.norm_spec, out)
    code = EXIT_OK if rep.status == "converged" else EXIT_NOCONV
    return code, result


def _cmd_sweep(cfg: RunConfig, prob: OdeProblem, out: Path) -> tuple[int, dict]:
    params = cfg.params
    if "sigmas" in params:
        entries = sweep_sigma_ladder(
            prob, cfg.solver, [float(s) for s in params["sigmas"]],
            samples_per_sigma=int(params.get("samples_per_sigma", 3)),
            keep_solutions=False,
        )
    else:
        dom = epsilon_domain_from(_require(params, "domain", "params"), "params.domain")
        pool = ThreadPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None
        try:
            entries = sweep_epsilon(dom, prob, cfg.solver,
                                    count=int(params.get("count", 8)),
                                    keep_solutions=False,
                                    map_fn=pool.map if pool else None)
        finally:
            if pool:
                pool.shutdown()
    rows = [
        {
            "eps": [e.eps.real, e.eps.imag],
            "status": e.report.status,
            "sol_norm": e.sol_norm if math.isfinite(e.sol_norm) else repr(e.sol_norm),
            "iterations": e.report.iterations,
        }
        for e in entries
    ]
    flagged = [r for r in rows if r["status"] != "converged"]
    result = {"command": cfg.command, "entries": rows,
              "flagged_count": len(flagged)}
    return EXIT_OK, result


def _cmd_probe_analytic(cfg: RunConfig, prob, out: Path) -> tuple[int, dict]:
    params = cfg.params
    sigma = float(params.get("sigma", 0.05))
    mu = float(params.get("mu", 5.0))
    dom = EpsilonDomain.cone(sigma, mu)
    center = complex(params.get("center", 1.5 * sigma))
    radius = float(params.get("radius", 0.2 * sigma))
    solve_fn = pde_solve_fixed_point if isinstance(prob, PdeProblem) else None
    pool = ThreadPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None
    try:
        probe = analyticity_probe(center, radius, prob, cfg.solver,
                                  points=int(params.get("points", 16)), domain=dom,
                                  map_fn=pool.map if pool else None,
                                  solve_fn=solve_fn)
    finally:
        if pool:
            pool.shutdown()
    result = {
        "command": cfg.command,
        "center": [probe.center.real, probe.center.imag],
        "radius": probe.radius,
        "harmonic_norms": probe.coefficient_norms,
        "decay_ratios": probe.decay_ratios,
        "geometric_ratio": probe.geometric_ratio,
        "cauchy_vs_fd": probe.cauchy_vs_fd,
    }
    return EXIT_OK, result


def _cmd_low_reg(cfg: RunConfig, prob: OdeProblem, out: Path) -> tuple[int, dict]:
    params = cfg.params
    eps = complex(params.get("epsilon", 0.05))
    s_grid = [float(s) for s in params.get("s_grid", [0.0, 0.25, 0.5, 0.75])]
    res = low_regularity_solve(eps, prob, cfg.solver, s_grid)
    result = {
        "command": cfg.command,
        "report": res.report.to_dict(),
        "l2_ratio": res.l2_ratio,
        "rates": {
            str(s): {
                "fitted": res.fitted_rates[s],
                "predicted": res.predicted_rates[s],
            }
            for s in res.s_grid
        },
    }
    return EXIT_OK, result


def _cmd_verify(cfg: RunConfig, prob, out: Path) -> tuple[int, dict]:
    params = cfg.params
    dom = epsilon_domain_from(
        params.get("domain", {"kind": "real_annulus", "sigma": 0.01}), "params.domain"
    )
    cert = certify_bounds(prob, dom, samples=int(params.get("samples", 8)),
                          fault=cfg.inject_fault)
    result = {
        "command": cfg.command,
        "kind": cert.kind,
        "passed": cert.passed,
        "c_emp": cert.c_emp,
        "violations": cert.violations,
        "details": _sanitize(cert.details),
        "fault": cfg.inject_fault,
    }
    return (EXIT_OK if cert.passed else EXIT_CERT), result


def _cmd_demo_liouville(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    params = cfg.params
    spec = LiouvilleSpec(
        levels=int(params.get("levels", 2)),
        growth=float(params.get("growth", 1.0)),
        first_quotient=int(params.get("first_quotient", 3)),
    )
    freq = build_liouville(spec)
    K = int(params.get("K", 16))
    ladder = [float(e) for e in params.get(
        "eps_ladder", np.geomspace(1e-2, 1e-6, 13).tolist()
    )]
    usable = [w for w in freq.witnesses if max(abs(w.k[0]), abs(w.k[1])) <= K]
    liou_prob = make_witness_problem(freq.omega, [w.k for w in usable], K)
    liou = nondiff_probe(liou_prob, ladder)

    golden = (1.0, SYMBOLIC_OMEGA["golden"])
    control_ks = [(-13, 8)]
    control_prob = make_witness_problem(golden, control_ks, K)
    control = nondiff_probe(control_prob, ladder)
    control_scan = scan_for_witnesses(golden, 50)

    result = {
        "command": cfg.command,
        "omega": list(freq.omega),
        "witnesses": [
            {
                "k": list(w.k), "divisor_log10": w.divisor_log10,
                "divisor_float": w.divisor_float, "bound": w.bound,
            }
            for w in freq.witnesses
        ],
        "truncated_at": freq.truncated_at,
        "notes": freq.notes,
        "liouville": {
            "quotients": liou.quotients,
            "decade_growth": liou.decade_growth,
            "max_decade_growth": liou.max_decade_growth,
            "closed_form_mismatch": liou.closed_form_mismatch,
        },
        "control": {
            "quotients": control.quotients,
            "decade_growth": control.decade_growth,
            "max_decade_growth": control.max_decade_growth,
            "witness_scan_hits": len(control_scan),
        },
    }
    return EXIT_OK, result


def run(cfg: RunConfig) -> int:
    """Execute one configured command; returns the process exit code."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed % (2 ** 32))

    try:
        prob = None
        if cfg.command != "demo-liouville":
            if cfg.problem is None:
                raise InputError(f"command {cfg.command} needs a problem file")
            prob = parse_problem(cfg.problem)

        if cfg.command == "solve-ode":
            if not isinstance(prob, OdeProblem):
                raise InputError("solve-ode needs an ODE problem")
            code, result = _cmd_solve_ode(cfg, prob, out)
        elif cfg.command == "solve-pde":
            if not isinstance(prob, PdeProblem):
                raise InputError("solve-pde needs a PDE problem")
            code, result = _cmd_solve_pde(cfg, prob, out)
        elif cfg.command == "sweep":
            if not isinstance(prob, OdeProblem):
                raise InputError("sweep needs an ODE problem")
            code, result = _cmd_sweep(cfg, prob, out)
        elif cfg.command == "probe-analytic":
            code, result = _cmd_probe_analytic(cfg, prob, out)
        elif cfg.command == "low-reg":
            if not isinstance(prob, OdeProblem):
                raise InputError("low-reg needs an ODE problem")
            code, result = _cmd_low_reg(cfg, prob, out)
        elif cfg.command == "verify":
            code, result = _cmd_verify(cfg, prob, out)
        elif cfg.command == "demo-liouville":
            code, result = _cmd_demo_liouville(cfg, out)
        else:  # unreachable: RunConfig.load validates
            raise InputError(f"unknown command {cfg.command}")
    except InputError as exc:
        _emit_error(cfg, out, str(exc), EXIT_INPUT)
        return EXIT_INPUT
    except Exception as exc:  # solver failures become documented errors
        log.exception("command failed")
        _emit_error(cfg, out, f"{type(exc).__name__}: {exc}", EXIT_NOCONV)
        return EXIT_NOCONV

    result["seed"] = cfg.seed
    result["problem_hash"] = _problem_hash(cfg.problem)
    result["solver"] = {
        "tol": cfg.solver.tol,
        "max_iter": cfg.solver.max_iter,
        "ball_radius": cfg.solver.ball_radius if math.isfinite(cfg.solver.ball_radius)
        else "inf",
        "norm": {"rho": cfg.norm_spec.rho, "m": cfg.norm_spec.m},
    }
    if prob is not None:
        lat = prob.lattice
        result["lattice"] = {
            "d": lat.d, "K": lat.K, "n": lat.n, "has_space": lat.has_space,
            "J": lat.J, "omega": list(lat.omega),
        }
    metadata = _metadata(cfg)
    emit(out, _sanitize(result), metadata)
    return code


def _emit_error(cfg: RunConfig, out: Path, message: str, code: int) -> None:
    emit(out, {"command": cfg.command, "error": message, "exit_code": code,
               "seed": cfg.seed},
         _metadata(cfg))


def _metadata(cfg: RunConfig) -> dict:
    import time

    return {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "version": __version__,
        "command": cfg.command,
        "jobs": cfg.jobs,
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="response-solver",
        description="Spectral fixed-point solver for quasi-periodic response solutions",
    )
    parser.add_argument("--config", required=True, help="run configuration JSON")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--inject-fault", default=None, choices=list(FAULT_NAMES),
                        help="test hook: perturb a certified multiplier by 2x")
    args = parser.parse_args(argv)

    level = os.environ.get("RESPONSE_SOLVER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))

    try:
        cfg = RunConfig.load(args.config, overrides={
            "jobs": args.jobs, "seed": args.seed, "out": args.out,
            "inject_fault": args.inject_fault,
        })
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
