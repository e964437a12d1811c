"""Command-line entry point: every verification as a reproducible subcommand.

Reports are JSON with sorted keys and a `schema` field; numbers are
emitted at full double precision (shortest round-trip repr).  The
aggregate `all` report contains no timings, so identical seeds produce
byte-identical output; wall-clock diagnostics go to stderr.  Exit codes:
0 all claims pass, 1 a claim failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import gammas, greens, langevin, perturb, sdcheck
from .lattice import LatticeSpec

SCHEMA = 1


def _jsonable(x):
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return str(x)


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True) + "\n"
    if out_path:
        tmp = out_path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    else:
        sys.stdout.write(text)


def _write_csv(path: str | None, header: list[str], rows) -> None:
    sink = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(sink)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            sink.close()


def _claim(name: str, inputs: dict, residual: float, tolerance: float,
           **values) -> dict:
    return {
        "claim": name,
        "inputs": inputs,
        "residual": residual,
        "tolerance": tolerance,
        "pass": bool(residual <= tolerance),
        "values": values,
    }


def _resolve_seed(args) -> int:
    env = os.environ.get("SQF_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"SQF_SEED must be an integer, got {env!r}") from exc
    return getattr(args, "seed", 0)


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'px,py', got {text!r}")
    return float(parts[0]), float(parts[1])


# ---------------------------------------------------------------------------
# claim runners (shared by subcommands and `all`)


def claim_gamma() -> dict:
    res = gammas.gamma_invariant_residuals()
    return _claim(
        "gamma algebra: anticommutators 2*delta, hermiticity, "
        "gamma3 = -i gamma1 gamma2",
        {}, max(res.values()), 0.0, residuals=res,
    )


def claim_dirac(m: float, grid: int) -> dict:
    spec = LatticeSpec(grid, grid)
    p1, p2 = spec.momentum_grids()
    r = greens.dirac_identity_max_residual(m, p1, p2)
    return _claim(
        "momentum-space Dirac identity (i pslash + m) S(p) = I",
        {"m": m, "grid": grid}, r, 1e-13,
    )


def claim_stationary_fermion(m: float, t_cut: float, grid: int) -> dict:
    spec = LatticeSpec(grid, grid)
    table = langevin.free_fermion_table(spec, m, t_cut)
    exact = langevin.euclidean_S_grid(spec, m)
    err = float(np.max(np.abs(table.estimates - exact)))
    # decay-rate fit of the truncation error at p = 0
    ts = np.arange(1.0, 5.5, 1.0)
    errs = [
        float(np.max(np.abs(
            greens.stationary_fermion_correlator(t, (0.0, 0.0), m)
            - greens.euclidean_S((0.0, 0.0), m)
        )))
        for t in ts
    ]
    slope = float(np.polyfit(ts, np.log(errs), 1)[0])
    slope_ok = abs(slope + 2.0 * m) <= 0.05 * 2.0 * m
    out = _claim(
        "free-fermion stationary correlator reproduces S(p)",
        {"m": m, "T_cut": t_cut, "grid": grid}, err, 1e-8,
        decay_slope=slope, expected_slope=-2.0 * m,
    )
    out["pass"] = bool(out["pass"] and slope_ok)
    return out


def claim_boson_chain(seed: int, grid: int = 16, chains: int = 8,
                      steps: int = 120000, burnin: int = 20000,
                      dt: float = 0.01, bigm: float = 1.0,
                      integrator: str = "exp") -> dict:
    spec = LatticeSpec(grid, grid)
    params = greens.ModelParams(m=1.0, M=bigm)
    config = langevin.ChainConfig(
        dt=dt, n_steps=steps, n_burn_in=burnin, n_chains=chains, seed=seed,
        integrator=(langevin.Integrator.EXPONENTIAL_MODE if integrator == "exp"
                    else langevin.Integrator.EULER_MARUYAMA),
    )
    table = langevin.run_boson_chain(config, params, spec)
    exact = langevin.boson_exact_variance(spec, params)
    z = np.abs((table.estimates - exact) / table.stderr)
    frac3 = float(np.mean(z <= 3.0))
    zmax = float(np.max(z))
    out = _claim(
        "boson chain stationary law <|phihat|^2> = 1/(p^2 + M^2)",
        {"grid": grid, "M": bigm, "dt": dt, "steps": steps,
         "burnin": burnin, "chains": chains, "seed": seed,
         "integrator": integrator},
        zmax, 4.0, frac_within_3sigma=frac3, max_zscore=zmax,
        n_samples=table.n_samples,
    )
    out["pass"] = bool(zmax <= 4.0 and frac3 >= 0.99)
    return out


def claim_green_identity(seed: int, n_points: int, m: float = 1.0,
                         bigm: float = 1.0, tol: float = 1e-8) -> dict:
    params = greens.ModelParams(m=m, M=bigm)
    rng = np.random.default_rng(seed)
    worst_equal = 0.0
    worst_diff = 0.0
    for _ in range(n_points):
        t = float(rng.uniform(0.0, 3.0))
        p = tuple(rng.normal(scale=1.5, size=2))
        res = greens.green_equal_time_identity(t, t, p, params)
        worst_equal = max(worst_equal, res.lhs_norm)
        t1, t2 = sorted(rng.uniform(0.0, 3.0, size=2))
        p = tuple(rng.normal(scale=1.5, size=2))
        res = greens.green_equal_time_identity(t2, t1, p, params)
        worst_diff = max(worst_diff, res.diff_norm)
    return _claim(
        "equal-time kernel identity: the convolution of d_t G with "
        "Q^T G^T equals (Q^T G^T - G Q^T)/2 and vanishes at equal times",
        {"seed": seed, "n_points": n_points, "m": m, "M": bigm},
        max(worst_equal, worst_diff), tol,
        equal_time_norm=worst_equal, split_time_diff=worst_diff,
    )


def claim_sd_equation(sites: int, g: float, order: int,
                      with_corruption: bool = True) -> dict:
    params = greens.ModelParams(m=1.0, M=1.0, g=g)
    model = sdcheck.MicroModel(sdcheck.SHAPE_OF[sites], params)
    z = sdcheck.generating_functional(model, boson_order=order + 2)
    residual = sdcheck.sd_equation_residual(model, order, z=z)
    values = {}
    passed = residual <= 1e-9
    if with_corruption:
        corrupted = sdcheck.sd_equation_residual(
            model, order, mass_shift=0.1, z=z
        )
        ratio = corrupted / max(residual, 1e-300)
        values = {"corrupted_residual": corrupted, "sensitivity_ratio": ratio}
        passed = passed and ratio >= 1e5
    out = _claim(
        "Schwinger-Dyson equation of the generating functional: "
        "(E(Q^T d/dK) - K) Z = 0",
        {"sites": sites, "g": g, "source_order": order},
        residual, 1e-9, **values,
    )
    out["pass"] = bool(passed)
    return out


def claim_hessian_identity(sites: int, trials: int, seed: int) -> dict:
    params = greens.ModelParams(m=1.0, M=1.0, g=1.0)
    model = sdcheck.MicroModel(sdcheck.SHAPE_OF[sites], params)
    rng = np.random.default_rng(seed)
    worst = sdcheck.hessian_identity_residual(model)
    for _ in range(trials):
        fp = sdcheck.random_field_point(model, rng)
        worst = max(worst, sdcheck.hessian_identity_residual(model, fp))
    return _claim(
        "second-derivative block identity Q^T U_l^T = U_r Q^T "
        "(exact polynomial zero)",
        {"sites": sites, "trials": trials, "seed": seed}, worst, 0.0,
    )


def claim_symmetry(sites: int) -> dict:
    params = greens.ModelParams(m=1.0, M=1.0, g=0.5)
    model = sdcheck.MicroModel(sdcheck.SHAPE_OF[sites], params)
    rep = sdcheck.symmetry_check(model)
    ok = (rep.parity_residual == 0.0 and rep.ct_residual == 0.0
          and rep.ct_no_massflip_residual > 0.0)
    out = _claim(
        "action symmetries: parity invariance exact; charge-time "
        "covariance exact with the mass flip, broken without it",
        {"sites": sites, "shape": list(sdcheck.SHAPE_OF[sites])},
        max(rep.parity_residual, rep.ct_residual), 0.0,
        parity_residual=rep.parity_residual,
        ct_residual=rep.ct_residual,
        ct_without_massflip=rep.ct_no_massflip_residual,
    )
    out["pass"] = bool(ok)
    return out


def claim_perturb(order: int, n_modes: int, m: float, bigm: float,
                  t_cut: float) -> dict:
    params = greens.ModelParams(m=m, M=bigm, g=1.0)
    ms = perturb.ToyModeSet.subgroup(n_modes)
    comparisons = []
    worst = 0.0
    ok = True
    for k in range(order + 1):
        c = perturb.compare_order(k, ms, params, T_cut=t_cut)
        comparisons.append({
            "order": c.order,
            "lhs": c.lhs,
            "rhs": c.rhs,
            "diff": c.diff,
            "budget": c.budget,
            "pass": c.passed,
        })
        worst = max(worst, c.diff)
        ok = ok and c.passed
    tadpole, _ = perturb.phi_tadpole(ms, params, T_cut=t_cut)
    ok = ok and abs(tadpole) <= 1e-8
    out = _claim(
        "equal-time Langevin correlators match equilibrium moments "
        "order by order; the order-g tadpole cancels against the "
        "Wick counterterm",
        {"order": order, "modes": n_modes, "m": m, "M": bigm, "T_cut": t_cut},
        worst, 1e-6, comparisons=comparisons, phi_tadpole=abs(tadpole),
    )
    out["pass"] = bool(ok)
    return out


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_gamma_check(args) -> int:
    res = gammas.gamma_invariant_residuals()
    _emit(res, args.out)
    return 0 if max(res.values()) == 0.0 else 1


def _cmd_greens(args) -> int:
    params = greens.ModelParams(m=args.m, M=args.M)
    if args.greens_cmd == "eval":
        p = _parse_pair(args.p)
        g = greens.retarded_G(args.t, p, args.m)
        gbar = greens.retarded_Gbar(args.t, p, args.m)
        pk = greens.retarded_P(args.t, p, args.M)
        header = ["t", "p1", "p2", "m", "M"]
        row = [args.t, p[0], p[1], args.m, args.M]
        for name, mat in (("G", g), ("Gbar", gbar)):
            for i in range(2):
                for j in range(2):
                    header += [f"{name}{i+1}{j+1}_re", f"{name}{i+1}{j+1}_im"]
                    row += [mat[i, j].real, mat[i, j].imag]
        header.append("P")
        row.append(pk)
        _write_csv(args.out, header, [row])
        return 0
    if args.greens_cmd == "identity":
        p = _parse_pair(args.p)
        res = greens.green_equal_time_identity(
            args.t1, args.t2, p, params, tol=args.tol
        )
        payload = {
            "schema": SCHEMA,
            "claim": "equal-time kernel identity",
            "config": {"t1": args.t1, "t2": args.t2, "p": list(p),
                       "m": args.m, "M": args.M, "tol": args.tol},
            "lhs_norm": res.lhs_norm,
            "lhs_minus_rhs": res.diff_norm,
            "quad_error": res.quad_error,
            "tolerance": 1e-8,
            "pass": res.diff_norm <= 1e-8 and (
                args.t1 != args.t2 or res.lhs_norm <= 1e-8
            ),
        }
        _emit(payload, args.out)
        return 0 if payload["pass"] else 1
    if args.greens_cmd == "stationary":
        spec = LatticeSpec(args.grid, args.grid)
        table = langevin.free_fermion_table(spec, args.m, args.tcut)
        exact = langevin.euclidean_S_grid(spec, args.m)
        err = np.max(np.abs(table.estimates - exact), axis=(2, 3))
        n1, n2 = spec.mode_numbers()
        p1g, p2g = spec.momentum_grids()
        rows = [
            [int(n1[i]), int(n2[j]), p1g[i, j], p2g[i, j], err[i, j]]
            for i in range(args.grid) for j in range(args.grid)
        ]
        if args.csv:
            _write_csv(args.csv, ["n1", "n2", "p1", "p2", "err"], rows)
        payload = {
            "schema": SCHEMA,
            "claim": "free-fermion stationary correlator reproduces S(p)",
            "config": {"m": args.m, "tcut": args.tcut, "grid": args.grid},
            "max_err": float(np.max(err)),
            "tolerance": 1e-8,
            "pass": bool(np.max(err) <= 1e-8),
        }
        _emit(payload, args.out)
        return 0 if payload["pass"] else 1
    raise ValueError(f"unknown greens subcommand {args.greens_cmd!r}")


def _cmd_langevin(args) -> int:
    t0 = time.perf_counter()
    seed = _resolve_seed(args)
    claim = claim_boson_chain(
        seed=seed, grid=args.L, chains=args.chains, steps=args.steps,
        burnin=args.burnin, dt=args.dt, bigm=args.M,
        integrator=args.integrator,
    )
    spec = LatticeSpec(args.L, args.L)
    params = greens.ModelParams(m=1.0, M=args.M)
    config = langevin.ChainConfig(
        dt=args.dt, n_steps=args.steps, n_burn_in=args.burnin,
        n_chains=args.chains, seed=seed,
        integrator=(langevin.Integrator.EXPONENTIAL_MODE
                    if args.integrator == "exp"
                    else langevin.Integrator.EULER_MARUYAMA),
    )
    table = langevin.run_boson_chain(config, params, spec)
    exact = langevin.boson_exact_variance(spec, params)
    n1, n2 = spec.mode_numbers()
    modes = []
    rows = []
    for i in range(args.L):
        for j in range(args.L):
            z = (table.estimates[i, j] - exact[i, j]) / table.stderr[i, j]
            entry = {
                "mode": [int(n1[i]), int(n2[j])],
                "estimate": table.estimates[i, j],
                "stderr": table.stderr[i, j],
                "exact": exact[i, j],
                "zscore": z,
            }
            modes.append(entry)
            rows.append([int(n1[i]), int(n2[j]), table.estimates[i, j],
                         table.stderr[i, j], exact[i, j], z])
    if args.csv:
        _write_csv(args.csv, ["n1", "n2", "estimate", "stderr", "exact",
                              "zscore"], rows)
    payload = {
        "schema": SCHEMA,
        "claim": claim["claim"],
        "config": claim["inputs"],
        "normalization": table.normalization,
        "summary": claim["values"],
        "modes": modes,
        "pass": claim["pass"],
        "wall_time_s": time.perf_counter() - t0,
    }
    _emit(payload, args.out)
    return 0 if claim["pass"] else 1


def _cmd_sdcheck(args) -> int:
    t0 = time.perf_counter()
    if args.sdcheck_cmd == "sd-equation":
        claim = claim_sd_equation(args.sites, args.g, args.order)
    elif args.sdcheck_cmd == "hessian-identity":
        claim = claim_hessian_identity(args.sites, args.trials,
                                       _resolve_seed(args))
    elif args.sdcheck_cmd == "symmetry":
        claim = claim_symmetry(args.sites)
    else:
        raise ValueError(f"unknown sdcheck subcommand {args.sdcheck_cmd!r}")
    claim["schema"] = SCHEMA
    claim["wall_time_s"] = time.perf_counter() - t0
    _emit(claim, args.out)
    return 0 if claim["pass"] else 1


def _cmd_perturb(args) -> int:
    t0 = time.perf_counter()
    if args.dump_trees:
        perturb.dump_trees(args.dump_trees, max_order=min(args.order, 3))
    claim = claim_perturb(args.order, args.modes, args.m, args.M, args.tcut)
    claim["schema"] = SCHEMA
    claim["wall_time_s"] = time.perf_counter() - t0
    _emit(claim, args.out)
    return 0 if claim["pass"] else 1


def _cmd_all(args) -> int:
    seed = _resolve_seed(args)
    quick = args.quick
    t0 = time.perf_counter()
    claims = [claim_gamma(), claim_dirac(1.0, 64)]
    claims.append(claim_stationary_fermion(
        1.0, 20.0, 16 if quick else 64
    ))
    claims.append(claim_boson_chain(
        seed=seed,
        chains=4 if quick else 8,
        steps=30000 if quick else 120000,
        burnin=5000 if quick else 20000,
    ))
    claims.append(claim_green_identity(seed, 6 if quick else 20))
    claims.append(claim_sd_equation(1, 0.0, 2 if quick else 3))
    claims.append(claim_sd_equation(1, 0.3, 2 if quick else 3))
    if not quick:
        claims.append(claim_sd_equation(2, 0.0, 3))
        claims.append(claim_sd_equation(2, 0.3, 3))
    for sites in (1, 2) if quick else (1, 2, 3):
        claims.append(claim_hessian_identity(
            sites, 5 if quick else 20, seed + sites
        ))
    claims.append(claim_symmetry(4))
    claims.append(claim_perturb(
        1 if quick else 2, 1, 1.0, 1.0, 15.0
    ))
    ok = all(c["pass"] for c in claims)
    payload = {
        "schema": SCHEMA,
        "config": {"quick": quick, "seed": seed},
        "claims": claims,
        "pass": ok,
    }
    _emit(payload, args.out)
    print(
        f"{len(claims)} claims, {'all pass' if ok else 'FAILURES'} "
        f"in {time.perf_counter() - t0:.1f}s",
        file=sys.stderr,
    )
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqf",
        description="Stochastic-quantization workbench for the 2D Yukawa model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gamma-check", help="gamma-algebra invariant residuals")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gamma_check)

    p = sub.add_parser("greens", help="kernel evaluation and identities")
    gsub = p.add_subparsers(dest="greens_cmd", required=True)
    pe = gsub.add_parser("eval")
    pe.add_argument("--m", type=float, default=1.0)
    pe.add_argument("--M", type=float, default=1.0)
    pe.add_argument("--t", type=float, required=True)
    pe.add_argument("--p", required=True, help="px,py")
    pe.add_argument("--out")
    pi = gsub.add_parser("identity")
    pi.add_argument("--t1", type=float, required=True)
    pi.add_argument("--t2", type=float, required=True)
    pi.add_argument("--p", default="0.0,0.0")
    pi.add_argument("--m", type=float, default=1.0)
    pi.add_argument("--M", type=float, default=1.0)
    pi.add_argument("--tol", type=float, default=1e-10)
    pi.add_argument("--out")
    ps = gsub.add_parser("stationary")
    ps.add_argument("--m", type=float, default=1.0)
    ps.add_argument("--tcut", type=float, default=20.0)
    ps.add_argument("--grid", type=int, default=64)
    ps.add_argument("--csv")
    ps.add_argument("--out")
    p.set_defaults(func=_cmd_greens)

    p = sub.add_parser("langevin", help="boson Langevin chains")
    lsub = p.add_subparsers(dest="langevin_cmd", required=True)
    pb = lsub.add_parser("boson")
    pb.add_argument("--L", type=int, default=16)
    pb.add_argument("--M", type=float, default=1.0)
    pb.add_argument("--dt", type=float, default=0.01)
    pb.add_argument("--steps", type=int, default=200000)
    pb.add_argument("--burnin", type=int, default=20000)
    pb.add_argument("--chains", type=int, default=8)
    pb.add_argument("--seed", type=int, default=42)
    pb.add_argument("--integrator", choices=("exp", "euler"), default="exp")
    pb.add_argument("--csv")
    pb.add_argument("--out")
    p.set_defaults(func=_cmd_langevin)

    p = sub.add_parser("sdcheck", help="exact micro-lattice checks")
    ssub = p.add_subparsers(dest="sdcheck_cmd", required=True)
    pl = ssub.add_parser("sd-equation")
    pl.add_argument("--sites", type=int, default=1, choices=(1, 2))
    pl.add_argument("--g", type=float, default=0.3)
    pl.add_argument("--order", type=int, default=3)
    pl.add_argument("--out")
    ph = ssub.add_parser("hessian-identity")
    ph.add_argument("--sites", type=int, default=2, choices=(1, 2, 3, 4))
    ph.add_argument("--trials", type=int, default=20)
    ph.add_argument("--seed", type=int, default=7)
    ph.add_argument("--out")
    py = ssub.add_parser("symmetry")
    py.add_argument("--sites", type=int, default=4, choices=(1, 2, 3, 4))
    py.add_argument("--out")
    p.set_defaults(func=_cmd_sdcheck)

    p = sub.add_parser("perturb", help="order-by-order correlator comparison")
    psub = p.add_subparsers(dest="perturb_cmd", required=True)
    pc = psub.add_parser("compare")
    pc.add_argument("--order", type=int, default=2, choices=(0, 1, 2))
    pc.add_argument("--m", type=float, default=1.0)
    pc.add_argument("--M", type=float, default=1.0)
    pc.add_argument("--modes", type=int, default=1, choices=(1, 2, 4))
    pc.add_argument("--tcut", type=float, default=15.0)
    pc.add_argument("--dump-trees", dest="dump_trees")
    pc.add_argument("--out")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("all", help="run the whole verification suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
