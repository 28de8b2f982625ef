"""
Command-line front end.

Each invocation parses one JSON configuration (see :mod:`momentspec.io`),
runs one solve and writes its results to the output directory.

Exit codes: 0 success, 1 infeasible problem or solver failure, 2 usage or
configuration error.
"""

import argparse
import os
import sys

import numpy as np

from .covext import CovSequence, arma_from_solution, covext_solve
from .estimator import Status, homotopy_solve, phi_lambda
from .exceptions import ConfigError, Infeasible
from .filter_bank import covext_shape
from .io import (
    load_config,
    matrix_to_json,
    polynomial_record,
    read_lambda,
    write_json,
    write_spectrum_csv,
    write_trace,
    lambda_record,
)
from .moments import feasibility, range_basis

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(config):
    os.makedirs(config.out_dir, exist_ok=True)
    return config.out_dir


def cmd_check(config):
    """Print the feasibility report; 0 iff ``Sigma`` is feasible."""
    bank = config.bank
    basis = range_basis(bank, config.grid)
    feas = feasibility(config.Sigma, basis)
    n, m = bank.n, bank.m
    print(f"n = {n}, m = {m}")
    print(f"range dimension = {basis.dim} (m(2n-m) = {m * (2 * n - m)})")
    print(f"range residual = {feas.range_residual:.3e}")
    print(f"positive definite = {feas.positive_definite}")
    print(f"feasible = {feas.feasible}")
    return EXIT_OK if feas.feasible else EXIT_FAIL


def cmd_estimate(config):
    """Solve and write ``lambda.json``, ``spectrum.csv`` and ``trace.ndjson``."""
    result = homotopy_solve(config.bank, config.Sigma, config.Psi, config.options)
    out = _out_dir(config)
    write_json(os.path.join(out, "lambda.json"), lambda_record(result, config))
    write_trace(os.path.join(out, "trace.ndjson"), result.trace)
    if result.phi is not None:
        write_spectrum_csv(os.path.join(out, "spectrum.csv"), config.grid, result.phi)
    print(f"status = {result.status.value}")
    if result.message:
        print(result.message)
    print(f"moment residual = {result.moment_residual:.3e}")
    return EXIT_OK if result.status is Status.CONVERGED else EXIT_FAIL


def _cov_sequence(config):
    m, p = covext_shape(config.bank)
    Sigma = config.Sigma
    seq = CovSequence(np.array([Sigma[k * m : (k + 1) * m, :m] for k in range(p + 1)]))
    if not np.allclose(seq.toeplitz(), Sigma, rtol=0, atol=1e-12 * max(1.0, np.abs(Sigma).max())):
        raise Infeasible("sigma is not block Toeplitz")
    return seq


def cmd_covext(config):
    """
    Covariance extension; writes ``d_polynomial.json``, ``moments_check.json``
    and, when the prior has a polynomial factor, ``arma.json``.
    """
    if covext_shape(config.bank) is None:
        raise ConfigError("bank: the covext command requires a covext bank")
    seq = _cov_sequence(config)
    res = covext_solve(seq, config.Psi, config.options)
    status = res.result.status
    out = _out_dir(config)
    d_rec = {"status": status.value, "message": res.result.message}
    if res.D is not None:
        d_rec.update(polynomial_record(res.D))
        d_rec["schur"] = res.D.is_schur()
    write_json(os.path.join(out, "d_polynomial.json"), d_rec)
    check = {
        "status": status.value,
        "input": [matrix_to_json(C) for C in seq.blocks],
        "recovered": None if res.recovered is None else [matrix_to_json(C) for C in res.recovered.blocks],
        "max_deviation": None if res.D is None else res.max_deviation,
        "refined_deviation": None if np.isnan(res.refined_deviation) else res.refined_deviation,
    }
    write_json(os.path.join(out, "moments_check.json"), check)
    if res.D is not None and config.ma is not None:
        arma = arma_from_solution(res.D, config.ma)
        write_json(os.path.join(out, "arma.json"), {"ar": polynomial_record(arma.ar), "ma": polynomial_record(arma.ma)})
    print(f"status = {status.value}")
    if res.D is not None:
        print(f"max lag deviation = {res.max_deviation:.3e}")
        print(f"schur = {res.D.is_schur()}")
    ok = status is Status.CONVERGED and res.D is not None and res.max_deviation <= config.options.tol_mom
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(config, which):
    """Write ``prior_spectrum.csv`` or ``spectrum.csv`` (from ``lambda.json``)."""
    grid = config.grid
    if which == "prior":
        path = os.path.join(_out_dir(config), "prior_spectrum.csv")
        write_spectrum_csv(path, grid, config.Psi.samples(grid))
    else:
        lam_path = os.path.join(config.out_dir, "lambda.json")
        if not os.path.isfile(lam_path):
            raise ConfigError(f"solution file not found: {lam_path} (run estimate first)")
        Lam = read_lambda(lam_path)
        if Lam.shape != (config.bank.n, config.bank.n):
            raise ConfigError(f"{lam_path}: lambda is {Lam.shape}, bank has n = {config.bank.n}")
        path = os.path.join(config.out_dir, "spectrum.csv")
        write_spectrum_csv(path, grid, phi_lambda(config.bank, Lam, config.Psi, grid))
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="momentspec", description="Spectral estimation from generalized moments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("check", "feasibility report for the configured problem"),
        ("estimate", "solve the moment problem"),
        ("covext", "covariance extension with a Schur polynomial factor"),
        ("spectrum", "write prior or solution density samples"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="JSON problem configuration")
        p.add_argument("--grid", type=int, help="grid size (power of two)")
        p.add_argument("--tol-mom", type=float, help="relative moment residual tolerance")
        p.add_argument("--tol-fp", type=float, help="fixed-point increment tolerance")
        p.add_argument("--max-iter", type=int, help="iterations per homotopy stage")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="seed for a random sigma spec")
        if name == "spectrum":
            p.add_argument("--which", choices=("prior", "solution"), default="solution")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {"grid_size": args.grid, "tol_mom": args.tol_mom, "tol_fp": args.tol_fp, "max_iter": args.max_iter}
    try:
        config = load_config(args.config, overrides, args.seed)
        if args.out:
            config = type(config)(**{**config.__dict__, "out_dir": args.out})
        if args.command == "check":
            return cmd_check(config)
        if args.command == "estimate":
            return cmd_estimate(config)
        if args.command == "covext":
            return cmd_covext(config)
        return cmd_spectrum(config, args.which)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
