"""Command-line front end.

    fraccert COMMAND [--config run.json] [--out DIR] [--seed INT] [--tol REAL] [overrides]

Every run writes ``report.json`` (resolved config plus results, keys sorted),
``summary.txt`` and, where a table is produced, ``data.csv`` into the output
directory.  Exit codes: 0 all checks pass, 1 a check failed, 2 config error,
3 numerical failure.
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
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp1f1

from . import certify, covering, fraclap, heatkernel, solver
from .grids import PeriodicGrid

COMMANDS = ("flap", "kernel", "certify", "covering", "riesz", "simulate", "norm")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """All run parameters; the defaults here are the only defaults used anywhere."""

    command: str = "certify"
    # problem
    N: int = 1
    s: float = 0.5
    alpha: float = 0.0
    beta: float = 0.5
    K: float = 1.0
    log_correction: bool = False
    p: float = 1.0
    T: float = 1.0
    c0: float | None = None
    # certificate controls
    lambda_factor: float = 2.0
    epsilon: float | None = None
    R_epsilon: float | None = None
    # numerics
    tol: float = 1e-4
    quad_tol: float = 1e-10
    L: float = 3276.8
    M: int = 65536
    R_list: list = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0, 64.0])
    dt: float | None = None
    t_final: float = 0.5
    sigma: float = 0.2
    aux_beta: float = 0.9
    samples: int = 1_000_000
    # output
    out: str = "fraccert_out"
    seed: int = 0

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.command in COMMANDS, f"command must be one of {', '.join(COMMANDS)} (got {self.command!r})")
        need(isinstance(self.N, int) and self.N >= 1, f"N must be a positive integer (got {self.N})")
        need(0 < self.s < 1, f"s must lie in (0, 1) (got {self.s})")
        need(self.beta > 0, f"beta must be > 0 (got {self.beta})")
        need(self.K > 0, f"K must be > 0 (got {self.K})")
        need(self.p >= 1, f"p must be >= 1 (got {self.p})")
        need(self.T > 0, f"T must be > 0 (got {self.T})")
        need(self.c0 is None or self.c0 > 0, f"c0 must be > 0 (got {self.c0})")
        need(self.lambda_factor > 1, f"lambda_factor must be > 1 (got {self.lambda_factor})")
        for name in ("tol", "quad_tol", "L", "t_final", "sigma", "aux_beta"):
            need(getattr(self, name) > 0, f"{name} must be > 0 (got {getattr(self, name)})")
        need(self.M >= 2 and self.M % 2 == 0, f"M must be a positive even integer (got {self.M})")
        need(self.samples > 0, f"samples must be > 0 (got {self.samples})")
        need(self.dt is None or self.dt > 0, f"dt must be > 0 (got {self.dt})")
        need(len(self.R_list) > 0 and all(r > 0 for r in self.R_list), "R_list entries must be > 0")
        need(not self.log_correction or abs(self.alpha - 2 * self.s) < 1e-12,
             "log_correction requires alpha = 2s")
        return self

    @property
    def fo(self) -> fraclap.FracOrder:
        return fraclap.FracOrder(self.s, self.N)

    @property
    def density(self) -> certify.DensityModel:
        return certify.DensityModel(self.K, self.alpha, self.log_correction)


def load_config(path: str | None, command: str, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    data["command"] = command
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


# ---------------------------------------------------------------------------
# output helpers

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _atomic_write(path: str, text: str):
    folder = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(out_dir: str, cfg: RunConfig, result: dict, rows: list | None, passed: bool):
    os.makedirs(out_dir, exist_ok=True)
    report = {"config": dataclasses.asdict(cfg), "result": result, "passed": passed}
    _atomic_write(os.path.join(out_dir, "report.json"),
                  json.dumps(_clean(report), sort_keys=True, indent=2) + "\n")
    if rows:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for k, v in row.items()})
        _atomic_write(os.path.join(out_dir, "data.csv"), buf.getvalue())
    lines = [f"command: {cfg.command}", f"verdict: {'PASS' if passed else 'FAIL'}"]
    for k, v in sorted(_clean(result).items()):
        if not isinstance(v, (dict, list)):
            lines.append(f"{k}: {v}")
    _atomic_write(os.path.join(out_dir, "summary.txt"), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# commands

def gaussian_flap_exact(fo: fraclap.FracOrder, r):
    """(-Delta)^s exp(-|x|^2) = 4^s Gamma(N/2+s)/Gamma(N/2) 1F1(N/2+s; N/2; -|x|^2)."""
    N, s = fo.N, fo.s
    return 4**s * math.gamma(N / 2 + s) / math.gamma(N / 2) * hyp1f1(N / 2 + s, N / 2, -np.square(r))


def cmd_flap(cfg: RunConfig):
    fo = cfg.fo
    g = fraclap.gaussian(fo.N)
    rows, worst = [], 0.0
    radii = np.linspace(0.0, 5.0, 11)
    spectral = None
    if fo.N == 1:
        grid, spec_vals = fraclap.flap_spectral_field(g, fo, cfg.L, cfg.M)
        spectral = lambda r: float(np.interp(r, grid.axis, spec_vals))
    for r in radii:
        x = np.zeros(fo.N)
        x[0] = r
        pv = fraclap.flap_pv(g, x, fo, tol=cfg.quad_tol).value
        exact = float(gaussian_flap_exact(fo, r))
        sp = spectral(r) if spectral else math.nan
        vals = [v for v in (pv, exact, sp) if math.isfinite(v)]
        err = max(abs(a - b) for a in vals for b in vals) / abs(exact)
        worst = max(worst, err)
        rows.append({"field": "gaussian", "r": r, "closed_form": exact,
                     "pv_quadrature": pv, "spectral": sp, "max_rel_err": err})
    psi = fraclap.power_weight(cfg.beta, fo.N)
    for r in np.linspace(1.5, 5.0, 8):
        x = np.zeros(fo.N)
        x[0] = r
        pv = fraclap.flap_pv(psi, x, fo, tol=cfg.quad_tol).value
        closed = -fraclap.flap_radial_closed_form(cfg.beta, fo, r)[0]
        err = abs(pv - closed) / abs(pv)
        worst = max(worst, err)
        rows.append({"field": "psi", "r": r, "closed_form": closed,
                     "pv_quadrature": pv, "spectral": math.nan, "max_rel_err": err})
    cal = fraclap.calibrate_radial_constant(float(cfg.beta), fo)
    result = {"max_pairwise_rel_err": worst, "C_check": cal.constant,
              "C_check_classical": cal.classical, "calibration_residual": cal.residual,
              "normalization_constant": fraclap.normalization_constant(fo)}
    return result, rows, worst <= cfg.tol


def cmd_kernel(cfg: RunConfig):
    kp = heatkernel.KernelProfile(cfg.fo)
    xs = np.linspace(-100, 100, 401)
    if cfg.N > 1:
        xs = np.stack([xs] + [np.zeros_like(xs)] * (cfg.N - 1), axis=-1)
    ts = np.geomspace(0.01, 10, 25)
    rep = heatkernel.bound_check(kp, xs, ts, max_ratio=100.0)
    mass = kp.mass()
    r = np.concatenate([[0.0], np.geomspace(1e-2, 200, 120)])
    rows = [{"r": ri, "profile_unit_mass": float(kp.unit_profile(ri)),
             "profile_paper_raw": float(kp.unit_profile(ri)) * (2 * math.pi) ** cfg.N} for ri in r]
    passed = rep.passed and abs(mass - 1) <= 1e-6
    result = {"ratio_min": rep.ratio_min, "ratio_max": rep.ratio_max,
              "max_over_min": rep.ratio_max / rep.ratio_min, "mass": mass,
              "P0_raw": heatkernel.raw_profile_at_origin(cfg.fo), "edge_mismatch": kp.edge_mismatch}
    return result, rows, passed


def cmd_certify(cfg: RunConfig):
    par = certify.ProblemSpec(cfg.fo, cfg.density, cfg.beta, cfg.p, T=cfg.T)
    case = certify.classify(par)
    result = {"case": case.value}
    if case is certify.CaseLabel.NONE:
        return result, [], False
    th = certify.compute_thresholds(par, cfg.epsilon, cfg.R_epsilon)
    lam = cfg.lambda_factor * th.value if th.value > 0 else 1.0
    prep = certify.verify_parabolic(par, lam, thresholds=th)
    pc0K = cfg.p * cfg.c0 * cfg.K if cfg.c0 else cfg.lambda_factor * cfg.K * th.value or cfg.K
    ell = certify.ProblemSpec(cfg.fo, cfg.density, cfg.beta, cfg.p, c0=pc0K / (cfg.p * cfg.K))
    erep = certify.verify_elliptic(ell, thresholds=th)
    result.update({"parabolic": prep.summary(), "elliptic": erep.summary(),
                   "lambda_min": th.value, "pc0K_min": cfg.K * th.value})
    rows = [{"r": r, "parabolic_scaled_residual": a, "elliptic_scaled_residual": b}
            for r, a, b in zip(prep.radii, prep.scaled, erep.scaled)]
    return result, rows, prep.verdict and erep.verdict


def cmd_covering(cfg: RunConfig):
    fo = cfg.fo
    beta = cfg.beta
    u = fraclap.radial_field(lambda r: (1 + r * r) ** (-(beta + cfg.N) / 2), cfg.N,
                             decay=fraclap.Decay.POWER, decay_exponent=beta + cfg.N, sup_bound=1.0)
    phi = fraclap.power_weight(beta, cfg.N)
    rows, results = [], []
    for R in cfg.R_list:
        res = covering.remainder_integral(u, phi, R, fo, samples=cfg.samples, seed=cfg.seed)
        results.append(res)
        row = {"R": R, **res.regions, "total": res.total, "cutoff_term": res.cutoff_term}
        rows.append(row)
    fits = {}
    for key in covering.REGIONS + ("total",):
        data = [(r["R"], r[key]) for r in rows]
        try:
            fits[key] = covering.decay_rate_fit(data)
        except covering.DegenerateFitError:
            fits[key] = math.nan
    totals = [r["total"] for r in rows]
    passed = True
    if cfg.N == 1:
        passed = all(b < a for a, b in zip(totals, totals[1:])) and totals[-1] / totals[0] <= 1e-2
    return {"fits": fits, "final_over_initial": totals[-1] / totals[0]}, rows, passed


def cmd_riesz(cfg: RunConfig):
    fo = cfg.fo
    rep = covering.riesz_potential(covering.bump(), fo)
    dens = certify.DensityModel(cfg.K, cfg.alpha)
    lem = covering.lemma42_check(rep, dens, cfg.R_list[:4], cfg.sigma, cfg.aux_beta)
    xs = np.linspace(-10, 10, 201)
    rows = [{"x": x, "phi": float(rep.potential(np.array([x]))[0]),
             "F": float(covering.bump()(np.array([[x]]))[0])} for x in xs]
    far_ok = all(abs(v - 1) <= 0.05 for v in rep.far_field.values())
    passed = rep.residual <= 1e-3 and 0 < rep.C0 < rep.C1 < math.inf and far_ok and lem.passed
    result = {"k_calibrated": rep.k_calibrated, "k_classical": rep.k_classical,
              "inversion_residual": rep.residual, "C0": rep.C0, "C1": rep.C1,
              "far_field_ratio": rep.far_field, "sup_ratios": lem.sup_ratios,
              "sup_ratio_variation": lem.variation}
    return result, rows, passed


def cmd_simulate(cfg: RunConfig):
    fo = cfg.fo
    if cfg.N != 1:
        raise ConfigError("simulate runs in N = 1")
    grid = PeriodicGrid(1, 256, 20.0)
    u0 = np.exp(-4 * grid.axis**2)
    dens = cfg.density
    rho = lambda x: dens(np.sqrt(np.sum(x * x, axis=-1)))
    rmin = float(rho(grid.points).min())
    dt = cfg.dt or solver.stable_step(grid, fo, rmin)
    traj = solver.evolve(u0, grid, fo, cfg.t_final, dt, rho=rho)
    energy = solver.energy_monitor(traj, rho=rho, p=2.0)
    big = PeriodicGrid(1, 4096, 100.0)
    cross = solver.convolution_crosscheck(np.exp(-big.axis**2), big, cfg.t_final, fo, tail_tol=1e-2)
    rows = [{"x": x, "u0": a, "uT": b} for x, a, b in zip(grid.axis, u0, traj.final)]
    result = {"steps": traj.states[-1].step, "dt": dt, "energy_initial": energy[0],
              "energy_final": energy[-1], "convolution_crosscheck": cross,
              "weighted_norm_T": solver.weighted_lp_norm(traj.final, grid, cfg.beta, cfg.p)}
    return result, rows, cross <= 1e-3 and bool(np.all(np.isfinite(traj.final)))


def cmd_norm(cfg: RunConfig):
    grid = PeriodicGrid(cfg.N, min(cfg.M, 4096 if cfg.N == 1 else 256), min(cfg.L, 1000.0))
    fields = {"one": np.ones(grid.shape), "gaussian": np.exp(-grid.radius**2)}
    result = {name: solver.weighted_lp_norm(v, grid, cfg.beta, cfg.p) for name, v in fields.items()}
    return result, [], True


DISPATCH = {
    "flap": cmd_flap, "kernel": cmd_kernel, "certify": cmd_certify, "covering": cmd_covering,
    "riesz": cmd_riesz, "simulate": cmd_simulate, "norm": cmd_norm,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraccert", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with RunConfig fields")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float)
    for name, typ in (("N", int), ("s", float), ("alpha", float), ("beta", float), ("K", float),
                      ("p", float), ("T", float), ("c0", float), ("dt", float),
                      ("t-final", float), ("sigma", float), ("samples", int), ("M", int), ("L", float)):
        ap.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))
    ap.add_argument("--log-correction", action="store_true", default=None, dest="log_correction")
    ap.add_argument("--R-list", type=float, nargs="+", dest="R_list")
    return ap


def run(cfg: RunConfig) -> int:
    try:
        result, rows, passed = DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        write_outputs(cfg.out, cfg, {"error": str(exc)}, None, False)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_outputs(cfg.out, cfg, result, rows, passed)
    print(f"{cfg.command}: {'PASS' if passed else 'FAIL'} -> {cfg.out}")
    return EXIT_OK if passed else EXIT_CHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_config(args.config, args.command, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
