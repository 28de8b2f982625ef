"""
Problem configuration and result files.

A configuration is a JSON object with sections ``bank``, ``sigma``, ``psi``
and optionally ``options`` and ``output``. A real matrix is a nested list
of numbers; a complex matrix replaces every entry by a ``[re, im]`` pair.
Relative file names are resolved against the directory of the
configuration file.

Example::

    {
      "bank": {"type": "covext", "m": 1, "p": 2},
      "sigma": {"covariances": [1.0, 0.5, 0.2]},
      "psi": {"polynomial": [2.0, 0.5]},
      "options": {"grid_size": 1024},
      "output": {"dir": "out"}
    }

Bank specs are ``{"type": "explicit", "A": ..., "B": ...}`` (``type`` may
be omitted) or ``{"type": "covext", "m": m, "p": p}``.
Sigma specs (exactly one key):

``matrix``
    explicit state covariance.
``covariances``
    lags ``C_0..C_p`` (covariance-extension banks only).
``from_spectrum``
    a density spec; ``Sigma`` is its image under the moment map.
``random``
    ``{"seed": s}``; ``Sigma = omega(Lambda_0)`` for a random positive
    definite ``Lambda_0`` and the configured prior, so that the problem is
    solvable by construction.
``time_series``
    ``{"file": "y.csv"}`` with one column per channel; biased sample lags
    (covariance-extension banks only).

Density specs (exactly one key): ``identity`` (``true``), ``constant``
(matrix), ``grid_csv`` (file in the spectrum CSV layout), ``rational``
(``{"A", "B", "C", "D"}``) or ``polynomial`` (coefficients ``N_0..N_q``).

All floats are written with 17 significant digits so repeated runs can be
compared byte for byte.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .covext import CovSequence, MatrixPolynomial, sample_covariances
from .estimator import EstimationOptions, TraceRecord, omega
from .exceptions import ConfigError
from .filter_bank import FilterBank, covext_bank, covext_shape
from .moments import SpectrumInput, gamma
from .synth import random_pd

__all__ = [
    "ProblemConfig",
    "load_config",
    "parse_config",
    "matrix_to_json",
    "matrix_from_json",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_json",
    "read_json",
    "write_trace",
    "read_trace",
    "lambda_record",
    "read_lambda",
    "polynomial_record",
    "read_polynomial",
]

SIGMA_KINDS = ("matrix", "covariances", "from_spectrum", "random", "time_series")
PSI_KINDS = ("identity", "constant", "grid_csv", "rational", "polynomial")


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    """
    A parsed configuration.

    ``sigma_source`` and ``psi_source`` record which spec kind produced
    ``Sigma`` and ``Psi``; ``ma`` holds the moving-average coefficients
    when the prior has a polynomial factor (needed for ARMA output).
    """

    bank: FilterBank
    Sigma: np.ndarray
    Psi: SpectrumInput
    options: EstimationOptions
    out_dir: str
    sigma_source: str
    psi_source: str
    ma: np.ndarray = None

    @property
    def grid(self):
        return self.options.grid


def _fmt(x):
    return format(float(x), ".17g")


def _clean(x):
    # JSON has no NaN or infinity
    return None if x is None or not math.isfinite(x) else float(x)


def matrix_to_json(M):
    """Nested lists of ``[re, im]`` pairs."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return np.stack([M.real, M.imag], axis=-1).tolist()


def matrix_from_json(obj, field="matrix"):
    """
    Inverse of :func:`matrix_to_json`. Nested lists of numbers are read as
    a real matrix, nested lists of ``[re, im]`` pairs as a complex one.
    """
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}: not a numeric matrix ({exc})") from exc
    if a.ndim == 3:
        if a.shape[-1] != 2:
            raise ConfigError(f"{field}: complex entries must be [re, im] pairs")
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim > 2:
        raise ConfigError(f"{field}: expected a matrix, got an array of shape {a.shape}")
    return np.atleast_2d(a).astype(complex)


def _square(obj, field):
    M = np.atleast_2d(matrix_from_json(obj, field))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"{field}: expected a square matrix, got shape {M.shape}")
    return M


def _one_of(section, kinds, field):
    if not isinstance(section, dict):
        raise ConfigError(f"{field}: expected an object with one of {', '.join(kinds)}")
    present = [k for k in section if k in kinds]
    unknown = [k for k in section if k not in kinds]
    if unknown:
        raise ConfigError(f"{field}: unknown key(s) {', '.join(unknown)}")
    if len(present) != 1:
        raise ConfigError(f"{field}: exactly one of {', '.join(kinds)} is required")
    return present[0], section[present[0]]


def _path(base, name, field):
    if not isinstance(name, str):
        raise ConfigError(f"{field}: expected a file name")
    path = name if os.path.isabs(name) else os.path.join(base, name)
    if not os.path.isfile(path):
        raise ConfigError(f"{field}: file not found: {path}")
    return path


def _parse_bank(spec):
    if not isinstance(spec, dict):
        raise ConfigError("bank: expected an object")
    kind = spec.get("type", "explicit")
    try:
        if kind == "covext":
            if set(spec) != {"type", "m", "p"}:
                raise ConfigError("bank: a covext bank needs exactly the keys type, m, p")
            if not all(isinstance(spec[k], int) for k in ("m", "p")):
                raise ConfigError("bank: m and p must be integers")
            return covext_bank(spec["m"], spec["p"])
        if kind != "explicit":
            raise ConfigError(f"bank.type: expected 'explicit' or 'covext', got {kind!r}")
        if set(spec) - {"type"} != {"A", "B"}:
            raise ConfigError("bank: an explicit bank needs exactly the keys A and B")
        return FilterBank(matrix_from_json(spec["A"], "bank.A"), matrix_from_json(spec["B"], "bank.B"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bank: {exc}") from exc


def _parse_density(spec, m, base, field, grid):
    kind, value = _one_of(spec, PSI_KINDS, field)
    ma = None
    try:
        if kind == "identity":
            if value is not True:
                raise ConfigError(f"{field}.identity: expected true")
            Psi = SpectrumInput.identity(m)
            ma = np.eye(m, dtype=complex)[None]
        elif kind == "constant":
            Psi = SpectrumInput.constant(_square(value, f"{field}.constant"))
        elif kind == "grid_csv":
            theta, samples = read_spectrum_csv(_path(base, value, f"{field}.grid_csv"))
            if samples.shape[0] != grid.size or not np.allclose(theta, grid.theta, rtol=0, atol=1e-12):
                raise ConfigError(f"{field}.grid_csv: samples do not lie on the {grid.size}-point grid")
            Psi = SpectrumInput.from_samples(samples)
        elif kind == "rational":
            if not isinstance(value, dict) or set(value) != {"A", "B", "C", "D"}:
                raise ConfigError(f"{field}.rational: expected keys A, B, C, D")
            parts = [matrix_from_json(value[k], f"{field}.rational.{k}") for k in "ABCD"]
            Psi = SpectrumInput.from_factor(*parts)
        else:
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{field}.polynomial: expected a non-empty list of coefficients")
            coeffs = np.array([matrix_from_json(c, f"{field}.polynomial") for c in value])
            Psi = SpectrumInput.from_polynomial(coeffs)
            ma = coeffs
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{field}.{kind}: {exc}") from exc
    if Psi.m != m:
        raise ConfigError(f"{field}: density is {Psi.m} x {Psi.m}, bank has m = {m}")
    return Psi, kind, ma


def _need_covext(bank, field):
    shape = covext_shape(bank)
    if shape is None:
        raise ConfigError(f"{field}: requires a covext bank")
    return shape


def _parse_sigma(spec, bank, Psi, base, grid, seed):
    kind, value = _one_of(spec, SIGMA_KINDS, "sigma")
    n = bank.n
    try:
        if kind == "matrix":
            Sigma = _square(value, "sigma.matrix")
        elif kind == "covariances":
            m, p = _need_covext(bank, "sigma.covariances")
            if not isinstance(value, list):
                raise ConfigError("sigma.covariances: expected a list of lag matrices")
            blocks = np.array([matrix_from_json(c, "sigma.covariances") for c in value])
            if blocks.shape != (p + 1, m, m):
                raise ConfigError(f"sigma.covariances: expected {p + 1} lags of size {m} x {m}")
            Sigma = CovSequence(blocks).toeplitz()
        elif kind == "from_spectrum":
            Phi, _, _ = _parse_density(value, bank.m, base, "sigma.from_spectrum", grid)
            Sigma = gamma(bank, Phi, grid)
        elif kind == "random":
            if not isinstance(value, dict) or set(value) - {"seed"}:
                raise ConfigError("sigma.random: expected {'seed': int}")
            s = seed if seed is not None else value.get("seed", 0)
            rng = np.random.default_rng(int(s))
            Sigma = omega(bank, random_pd(rng, n), Psi, grid)
        else:
            m, p = _need_covext(bank, "sigma.time_series")
            if not isinstance(value, dict) or set(value) != {"file"}:
                raise ConfigError("sigma.time_series: expected {'file': path}")
            y = np.loadtxt(_path(base, value["file"], "sigma.time_series.file"), delimiter=",", ndmin=2)
            if y.shape[1] != m:
                raise ConfigError(f"sigma.time_series: expected {m} columns, got {y.shape[1]}")
            Sigma = sample_covariances(y, p).toeplitz()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"sigma.{kind}: {exc}") from exc
    if Sigma.shape != (n, n):
        raise ConfigError(f"sigma.{kind}: expected {n} x {n}, got {Sigma.shape}")
    return Sigma, kind


def _parse_options(spec, overrides):
    spec = dict(spec or {})
    names = {f.name for f in fields(EstimationOptions)}
    unknown = set(spec) - names
    if unknown:
        raise ConfigError(f"options: unknown key(s) {', '.join(sorted(unknown))}")
    spec.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return replace(EstimationOptions(), **spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"options: {exc}") from exc


def parse_config(obj, base_dir=".", overrides=None, seed=None):
    """
    Build a :class:`ProblemConfig` from a decoded JSON object.

    ``overrides`` maps :class:`EstimationOptions` field names to values
    that replace the ``options`` section; ``seed`` replaces the seed of a
    ``random`` sigma spec.

    Raises
    ------
    ConfigError
        Naming the offending field.
    """
    if not isinstance(obj, dict):
        raise ConfigError("config: expected a JSON object")
    unknown = set(obj) - {"bank", "sigma", "psi", "options", "output"}
    if unknown:
        raise ConfigError(f"config: unknown section(s) {', '.join(sorted(unknown))}")
    for key in ("bank", "sigma", "psi"):
        if key not in obj:
            raise ConfigError(f"{key}: section is required")
    options = _parse_options(obj.get("options"), overrides)
    grid = options.grid
    bank = _parse_bank(obj["bank"])
    Psi, psi_source, ma = _parse_density(obj["psi"], bank.m, base_dir, "psi", grid)
    Sigma, sigma_source = _parse_sigma(obj["sigma"], bank, Psi, base_dir, grid, seed)
    output = obj.get("output") or {}
    if not isinstance(output, dict) or set(output) - {"dir"}:
        raise ConfigError("output: expected {'dir': path}")
    out_dir = output.get("dir", "out")
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    return ProblemConfig(bank, Sigma, Psi, options, out_dir, sigma_source, psi_source, ma)


def load_config(path, overrides=None, seed=None):
    """Read and parse a JSON configuration file."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(obj, os.path.dirname(os.path.abspath(path)), overrides, seed)


def write_spectrum_csv(path, grid, samples):
    """
    One row per grid point: ``theta`` then real and imaginary parts of the
    ``m x m`` sample in row-major order.
    """
    samples = np.asarray(samples, dtype=complex)
    m = samples.shape[1]
    header = ["theta"]
    for i in range(m):
        for j in range(m):
            header += [f"re_{i + 1}{j + 1}", f"im_{i + 1}{j + 1}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        flat = samples.reshape(samples.shape[0], -1)
        for th, row in zip(grid.theta, flat):
            vals = np.column_stack([row.real, row.imag]).ravel()
            w.writerow([_fmt(th)] + [_fmt(v) for v in vals])


def read_spectrum_csv(path):
    """Inverse of :func:`write_spectrum_csv`: ``(theta, samples)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    k = (data.shape[1] - 1) // 2
    m = int(round(math.sqrt(k)))
    if m * m != k or data.shape[1] != 2 * k + 1:
        raise ConfigError(f"{path}: expected 1 + 2 m^2 columns, got {data.shape[1]}")
    vals = data[:, 1::2] + 1j * data[:, 2::2]
    return data[:, 0], vals.reshape(-1, m, m)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_trace(path, trace):
    """One JSON object per line; non-finite values become ``null``."""
    with open(path, "w") as fh:
        for rec in trace:
            d = {"t": float(rec.t), "k": int(rec.k), "step_norm": _clean(rec.step_norm), "residual": _clean(rec.residual)}
            fh.write(json.dumps(d, allow_nan=False) + "\n")


def read_trace(path):
    out = []
    with open(path) as fh:
        for line in fh:
            d = json.loads(line)
            out.append(
                TraceRecord(
                    d["t"],
                    d["k"],
                    math.nan if d["step_norm"] is None else d["step_norm"],
                    math.nan if d["residual"] is None else d["residual"],
                )
            )
    return out


def lambda_record(result, config):
    """JSON-ready summary of an :class:`EstimationResult`."""
    return {
        "status": result.status.value,
        "message": result.message,
        "n": config.bank.n,
        "m": config.bank.m,
        "grid_size": config.options.grid_size,
        "moment_residual": _clean(result.moment_residual),
        "refined_residual": _clean(result.refined_residual),
        "t_reached": float(result.t_reached),
        "lambda": None if result.lam is None else matrix_to_json(result.lam),
        "lambda_psd": None if result.lam_psd is None else matrix_to_json(result.lam_psd),
    }


def read_lambda(path):
    """``Lambda`` from a file written by the ``estimate`` command."""
    rec = read_json(path)
    if rec.get("lambda") is None:
        raise ConfigError(f"{path}: no solution recorded (status {rec.get('status')})")
    return matrix_from_json(rec["lambda"], "lambda")


def polynomial_record(D):
    return {"m": D.m, "degree": D.degree, "coefficients": [matrix_to_json(c) for c in D.coeffs]}


def read_polynomial(obj):
    return MatrixPolynomial(np.array([matrix_from_json(c, "coefficients") for c in obj["coefficients"]]))
