"""Command-line interface: predict, simulate, stationary, eigen, specialfn,
validate, sweep.

Every run writes a JSON manifest (tool version, timestamp, seed, merged
configuration, output paths); CSV outputs carry a `# manifest:` comment line
and use '.'-decimal '.17g' floats with '\n' line endings, so reruns with the
same configuration reproduce them byte for byte.  A previous manifest can be
fed back through --config (flags win over file values).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import KramersSpdeError
from .kramers import RegimeTag, predict_time
from .potential import LocalPotential, quartic
from .simulate import SimConfig, mc_stats, run_replicas, _stats_from_samples
from .spectra import det_ratio, eigs_constant, eigs_profile
from .spectral import BoundaryCondition, NEUMANN, write_profile_csv
from .stationary import barrier_height, instanton
from . import validate as validate_mod

_FLOAT_FMT = ".17g"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, _FLOAT_FMT)
    return str(x)


def _parse_bc(name: str) -> BoundaryCondition:
    try:
        return BoundaryCondition(name.lower())
    except ValueError:
        raise KramersSpdeError(f"unknown boundary condition {name!r}") from None


def _parse_potential(spec) -> LocalPotential:
    if spec is None or spec == "quartic":
        return quartic()
    if isinstance(spec, dict):
        if "preset" in spec:
            return _parse_potential(spec["preset"])
        return LocalPotential.from_coefficients(spec["coefficients"])
    if isinstance(spec, (list, tuple)):
        return LocalPotential.from_coefficients(spec)
    return LocalPotential.from_coefficients([float(t) for t in spec.split(",")])


def _parse_list(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t != ""]


def _parse_grid(text: str) -> list[float]:
    """start:step:stop inclusive grid, or a comma list."""
    if ":" in str(text):
        parts = str(text).split(":")
        if len(parts) != 3:
            raise KramersSpdeError(f"grid must be start:step:stop, got {text!r}")
        a, h, b = (float(p) for p in parts)
        if h <= 0:
            raise KramersSpdeError("grid step must be positive")
        n = int(math.floor((b - a) / h + 1e-9)) + 1
        return [a + i * h for i in range(max(n, 0))]
    return _parse_list(text)


def _parse_d(text) -> float:
    if str(text).lower() in ("inf", "infinity"):
        return math.inf
    return int(text)


def _threads(requested) -> int:
    env = os.environ.get("KRAMERS_SPDE_THREADS")
    if env is not None:
        return max(1, int(env))
    if requested is not None:
        return max(1, int(requested))
    return os.cpu_count() or 1


def _merge_config(args: argparse.Namespace, parser_defaults: dict) -> dict:
    """Start from --config JSON (or a manifest), overlay explicitly set flags."""
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        cfg = loaded.get("config", loaded)
    for key, val in vars(args).items():
        if key in ("config", "func", "subcommand", "defaults"):
            continue
        if val is not None or key not in cfg:
            if val is not None:
                cfg[key] = val
            elif key not in cfg:
                cfg[key] = parser_defaults.get(key)
    return cfg


def _write_manifest(out_prefix: str, subcommand: str, config: dict,
                    outputs: list[str]) -> str:
    path = f"{out_prefix}_manifest.json"
    payload = {
        "tool": "kramers-spde",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "subcommand": subcommand,
        "seed": config.get("seed"),
        "config": {k: v for k, v in config.items() if k != "out"},
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path: str, manifest: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# manifest: {manifest}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
            fh.flush()


def _write_json(path: str, manifest: str, payload: dict) -> None:
    payload = dict(payload)
    payload["manifest"] = manifest
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


_PREDICT_HEADER = ["L", "eps", "regime", "lambda1", "mu1", "C4", "H0",
                   "prefactor", "log10_expected_time", "remainder_scale"]


def _prediction_row(p) -> list:
    return [p.L, p.eps, p.regime.value, p.lambda1, p.mu1, p.C4, p.H0,
            p.prefactor, p.log10_expected_time, p.remainder_scale]


def _cmd_predict(cfg: dict) -> int:
    pot = _parse_potential(cfg["potential"])
    bc = _parse_bc(cfg["bc"])
    d = _parse_d(cfg["d"])
    rows = []
    for L in _parse_list(cfg["L"]):
        for eps in _parse_list(cfg["eps"]):
            p = predict_time(pot, L, bc, eps, d=d, lambda_switch=cfg["lambda_switch"])
            rows.append(_prediction_row(p))
    out = cfg["out"]
    manifest = _write_manifest(out, "predict", cfg, [f"{out}.csv"])
    _write_csv(f"{out}.csv", manifest, _PREDICT_HEADER, rows)
    for row in rows:
        print(",".join(_fmt(v) for v in row))
    return 0


def _cmd_simulate(cfg: dict) -> int:
    pot = _parse_potential(cfg["potential"])
    bc = _parse_bc(cfg["bc"])
    sim = SimConfig(pot=pot, bc=bc, L=cfg["L"], d=int(cfg["d"]), eps=cfg["eps"],
                    dt=cfg["dt"], t_max=cfg["tmax"], r=cfg["r"], rho=cfg["rho"],
                    check_every=cfg["check_every"], refine=cfg["refine"],
                    seed=cfg["seed"], scheme=cfg["scheme"])
    samples = run_replicas(sim, cfg["n"], threads=_threads(cfg.get("threads")))
    stats = _stats_from_samples(samples, sim)
    pred = predict_time(pot, cfg["L"], bc, cfg["eps"], d=int(cfg["d"]))
    out = cfg["out"]
    manifest = _write_manifest(out, "simulate", cfg, [f"{out}.csv", f"{out}.json"])
    _write_csv(f"{out}.csv", manifest, ["replica", "seed", "tau", "censored", "steps"],
               [[i, s.seed_used, s.tau, int(s.censored), s.steps]
                for i, s in enumerate(samples)])
    _write_json(f"{out}.json", manifest, {
        "stats": stats.__dict__,
        "prediction": {k: (v.value if isinstance(v, (RegimeTag, BoundaryCondition)) else v)
                       for k, v in pred.__dict__.items()},
    })
    print(f"n={stats.n} mean={_fmt(stats.mean)} stderr={_fmt(stats.stderr)} "
          f"censored={stats.censored} predicted={_fmt(pred.expected_time)}")
    return 0


def _cmd_stationary(cfg: dict) -> int:
    pot = _parse_potential(cfg["potential"])
    bc = _parse_bc(cfg["bc"])
    L = cfg["L"]
    prof = instanton(pot, L, bc, n_samples=cfg["samples"])
    H0, tag = barrier_height(pot, L, bc)
    out = cfg["out"]
    manifest = _write_manifest(out, "stationary", cfg, [f"{out}.csv", f"{out}.json"])
    write_profile_csv(f"{out}.csv", prof.x, prof.u, manifest=manifest,
                      bc=bc.value, L=_fmt(L), d=prof.n_samples)
    _write_json(f"{out}.json", manifest, {
        "E": prof.E, "H0": H0, "transition_state": tag, "V_value": prof.V_value,
        "deriv_L2": prof.deriv_L2, "turning": list(prof.turning),
    })
    print(f"E={_fmt(prof.E)} H0={_fmt(H0)} V={_fmt(prof.V_value)} "
          f"deriv_L2={_fmt(prof.deriv_L2)}")
    return 0


def _cmd_eigen(cfg: dict) -> int:
    pot = _parse_potential(cfg["potential"])
    bc = _parse_bc(cfg["bc"])
    L, kmax = cfg["L"], cfg["kmax"]
    minus = eigs_constant(pot, L, bc, "minus", kmax)
    if cfg["which"] == "instanton":
        prof = instanton(pot, L, bc)
        rep = eigs_profile(prof, kmax=kmax, grid_n=cfg["grid_n"])
        ev = rep.eigenvalues
        if bc is NEUMANN:
            num = ev[1 : kmax + 1]
            den = minus.eigenvalues[1 : kmax + 1]
            ratio = float(np.exp(np.sum(np.log(num) - np.log(den))))
        else:
            mu1 = ev[2]
            pairs = np.sqrt(ev[3 : 3 + 2 * (kmax - 1) : 2] * ev[4 : 3 + 2 * (kmax - 1) : 2])
            base = np.array([(2 * k * math.pi / L) ** 2 for k in range(1, kmax + 1)]) \
                + pot.derivative(pot.u_minus, 2)
            ratio = float(np.exp(math.log(mu1 / base[0])
                                 + np.sum(np.log(pairs) - np.log(base[1:]))))
    else:
        rep = eigs_constant(pot, L, bc, cfg["which"], kmax)
        n_use = min(len(rep.eigenvalues), len(minus.eigenvalues)) - 1
        mask = np.arange(1, n_use + 1)
        ratio = det_ratio(rep, minus, n_use, num_mask=mask, den_mask=mask)
    out = cfg["out"]
    manifest = _write_manifest(out, "eigen", cfg, [f"{out}.csv", f"{out}.json"])
    _write_csv(f"{out}.csv", manifest, ["index", "eigenvalue"],
               list(enumerate(rep.eigenvalues)))
    _write_json(f"{out}.json", manifest, {
        "eigenvalues": list(rep.eigenvalues),
        "negative_count": rep.negative_count,
        "zero_modes": rep.zero_modes,
        "det_ratio": ratio,
    })
    print(f"negative_count={rep.negative_count} zero_modes={rep.zero_modes} "
          f"det_ratio={_fmt(ratio)}")
    return 0


def _cmd_specialfn(cfg: dict) -> int:
    from .specialfn import psi, theta
    grid = _parse_grid(cfg["grid"])
    rows = [[a, psi("+", a), psi("-", a), theta("+", a), theta("-", a)] for a in grid]
    out = cfg["out"]
    manifest = _write_manifest(out, "specialfn", cfg, [f"{out}.csv"])
    _write_csv(f"{out}.csv", manifest,
               ["alpha", "psi_plus", "psi_minus", "theta_plus", "theta_minus"], rows)
    for row in rows:
        print(",".join(_fmt(v) for v in row))
    return 0


def _cmd_validate(cfg: dict) -> int:
    results = validate_mod.run_suite(quick=not cfg.get("full", False))
    failed = [r for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    print(f"{len(results) - len(failed)}/{len(results)} invariant groups passed")
    return 4 if failed else 0


def _cmd_sweep(cfg: dict) -> int:
    pot = _parse_potential(cfg["potential"])
    bc = _parse_bc(cfg["bc"])
    d = _parse_d(cfg["d"])
    Ls = _parse_grid(cfg["L_grid"]) if cfg.get("L_grid") else [cfg["L"]]
    epss = _parse_grid(cfg["eps_grid"]) if cfg.get("eps_grid") else [cfg["eps"]]
    with_mc = bool(cfg.get("with_mc"))
    header = list(_PREDICT_HEADER)
    if with_mc:
        header += ["mc_mean", "mc_stderr", "censored"]
    out = cfg["out"]
    manifest = _write_manifest(out, "sweep", cfg, [f"{out}.csv"])
    threads = _threads(cfg.get("threads"))
    with open(f"{out}.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# manifest: {manifest}\n")
        fh.write(",".join(header) + "\n")
        fh.flush()
        for L in Ls:
            for eps in epss:
                p = predict_time(pot, L, bc, eps, d=d,
                                 lambda_switch=cfg["lambda_switch"])
                row = _prediction_row(p)
                if with_mc:
                    sim = SimConfig(pot=pot, bc=bc, L=L,
                                    d=int(cfg["mc_d"] if cfg.get("mc_d") else 15),
                                    eps=eps, dt=cfg["dt"], t_max=cfg["tmax"],
                                    r=cfg["r"], rho=cfg["rho"], seed=cfg["seed"])
                    stats = mc_stats(sim, cfg["n"], threads=threads)
                    row += [stats.mean, stats.stderr, stats.censored]
                fh.write(",".join(_fmt(v) for v in row) + "\n")
                fh.flush()
    print(f"wrote {out}.csv ({len(Ls) * len(epss)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kramers-spde",
        description="Metastable transition times for the 1D stochastic "
                    "Allen-Cahn equation: predictions and Monte Carlo.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, seed=False):
        p.add_argument("--potential", default=None,
                       help="preset name ('quartic') or ascending comma coefficients")
        p.add_argument("--config", default=None,
                       help="JSON config or manifest; explicit flags win")
        p.add_argument("--out", default=None, help="output path prefix")
        if seed:
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("predict", help="Kramers-law expected transition times")
    common(p)
    p.add_argument("--bc", default=None, choices=["neumann", "periodic"])
    p.add_argument("--L", default=None, help="domain length (comma list for sweeps)")
    p.add_argument("--eps", default=None, help="noise strength (comma list)")
    p.add_argument("--d", default=None, help="Galerkin truncation or 'inf'")
    p.add_argument("--lambda-switch", dest="lambda_switch", type=float, default=None)
    p.set_defaults(func=_cmd_predict,
                   defaults=dict(bc="neumann", L="1.0", eps="0.05", d="inf",
                                 lambda_switch=0.1, out="kramers_predict",
                                 potential="quartic"))

    p = sub.add_parser("simulate", help="Monte Carlo first-hitting times")
    common(p, seed=True)
    p.add_argument("--bc", default=None, choices=["neumann", "periodic"])
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--scheme", default=None, choices=["semi_implicit", "exponential"])
    p.add_argument("--check-every", dest="check_every", type=int, default=None)
    p.add_argument("--refine", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_simulate,
                   defaults=dict(bc="neumann", L=1.0, eps=0.05, d=15, dt=1e-3,
                                 tmax=1e4, rho=0.3, r=0.3, n=100, seed=0,
                                 scheme="semi_implicit", check_every=10, refine=8,
                                 threads=None, out="kramers_simulate",
                                 potential="quartic"))

    p = sub.add_parser("stationary", help="instanton profile and barrier height")
    common(p)
    p.add_argument("--bc", default=None, choices=["neumann", "periodic"])
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=_cmd_stationary,
                   defaults=dict(bc="neumann", L=4.0, samples=4096,
                                 out="kramers_stationary", potential="quartic"))

    p = sub.add_parser("eigen", help="linearization spectra and determinant ratios")
    common(p)
    p.add_argument("--bc", default=None, choices=["neumann", "periodic"])
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--which", default=None,
                   choices=["origin", "minus", "plus", "instanton"])
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.set_defaults(func=_cmd_eigen,
                   defaults=dict(bc="neumann", L=1.0, which="origin", kmax=16,
                                 grid_n=1024, out="kramers_eigen",
                                 potential="quartic"))

    p = sub.add_parser("specialfn", help="crossover functions Psi/Theta on a grid")
    common(p)
    p.add_argument("--grid", default=None, help="start:step:stop or comma list")
    p.set_defaults(func=_cmd_specialfn,
                   defaults=dict(grid="0:0.1:10", out="kramers_specialfn",
                                 potential="quartic"))

    p = sub.add_parser("validate", help="run the module invariant suite")
    common(p)
    p.add_argument("--full", action="store_true", default=None,
                   help="include the slow Monte Carlo invariants")
    p.set_defaults(func=_cmd_validate,
                   defaults=dict(full=False, out="kramers_validate",
                                 potential="quartic"))

    p = sub.add_parser("sweep", help="parameter sweeps with crash-safe CSV output")
    common(p, seed=True)
    p.add_argument("--bc", default=None, choices=["neumann", "periodic"])
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--L-grid", dest="L_grid", default=None, help="start:step:stop")
    p.add_argument("--eps-grid", dest="eps_grid", default=None, help="start:step:stop")
    p.add_argument("--d", default=None)
    p.add_argument("--lambda-switch", dest="lambda_switch", type=float, default=None)
    p.add_argument("--with-mc", dest="with_mc", action="store_true", default=None)
    p.add_argument("--mc-d", dest="mc_d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_sweep,
                   defaults=dict(bc="neumann", L=1.0, eps=0.05, L_grid=None,
                                 eps_grid=None, d="inf", lambda_switch=0.1,
                                 with_mc=False, mc_d=15, n=50, dt=1e-3, tmax=1e4,
                                 rho=0.3, r=0.3, seed=0, threads=None,
                                 out="kramers_sweep", potential="quartic"))
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = _merge_config(args, args.defaults)
    try:
        return args.func(cfg)
    except KramersSpdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
