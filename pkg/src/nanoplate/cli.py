"""Command line interface.

    nanoplate SUBCOMMAND [--config PATH] [--out DIR] [--seed N] [--dump-solution] [--no-plots]

Subcommands: solve, reconstruct, sweep, ucp, norms, material-check.
Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
failure, 64 usage error (unknown flag or subcommand).
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import NumericError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64
COMMANDS = ("solve", "reconstruct", "sweep", "ucp", "norms", "material-check")

log = logging.getLogger("nanoplate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="nanoplate", description="Strain-gradient nanoplate experiments.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="TOML experiment file (defaults if omitted)")
    p.add_argument("--out", type=Path, help="output directory (default: output.dir)")
    p.add_argument("--seed", type=int, help="override the noise seed (sweeps use seed, seed+1, ...)")
    p.add_argument("--dump-solution", action="store_true",
                   help="also store the stiffness and foundation matrices in the container")
    p.add_argument("--no-plots", action="store_true", help="skip SVG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _write_json(path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=float) + "\n")
    log.info("wrote %s", path)
    return path


def _truth(problem):
    from .harness import make_kappa
    return make_kappa(problem)


def cmd_solve(problem, out, args):
    from .container import save_deflection
    from .discretization import assemble_kappa_mass
    from .solver import check_load_neighborhood, energy_identity

    kappa = _truth(problem)
    w = problem.solve(kappa, {"kappa": kappa.describe()})
    Mk = assemble_kappa_mass(problem.space, kappa, problem.kbar / problem.domain.rho0)
    lhs, rhs = energy_identity(w, problem.K, Mk, problem.load)
    nb = check_load_neighborhood(w, problem.load)
    extra = {"K": problem.K, "M_kappa": Mk, "F": problem.F} if args.dump_solution else None
    save_deflection(w, out / "solution", extra)
    report = {"energy": lhs, "load_work": rhs, "relative_gap": abs(lhs - rhs) / abs(rhs),
              "w_P0": nb.w_P0, "sigma_bar_emp": nb.sigma_bar_emp,
              "load_neighborhood_ok": nb.ok, "problem": problem.describe()}
    _write_json(out / "energy_report.json", report)
    if not args.no_plots:
        from .plotting import plot_field
        plot_field(w, problem.domain.Lx, problem.domain.Ly, out / "deflection.svg", "deflection", label="w")
    print(f"energy {lhs:.12e}  load work {rhs:.12e}  gap {report['relative_gap']:.2e}")
    return EXIT_OK


def cmd_reconstruct(problem, out, args):
    from .inverse import Measurement, kappa_error, measure, project_measurement, reconstruct_kappa
    from .solver import check_load_neighborhood

    inv = problem.cfg["inverse"]
    truth = None
    if inv["measurement"]:
        path = Path(inv["measurement"])
        if problem.base_dir is not None and not path.is_absolute():
            path = problem.base_dir / path
        if not path.is_file():
            raise ValidationError(f"measurement file not found: {path}")
        m = Measurement.from_csv(path)
    else:
        truth = problem.basis.interpolate(_truth(problem))
        w = problem.solve(truth)
        m = measure(w, inv["n_samples"], inv["eps"], problem.load.f_bar, inv["seed"], problem.sigma)
        m.to_csv(out / "measurement.csv")
    w_meas = project_measurement(m, problem.space)
    nb = check_load_neighborhood(w_meas, problem.load)
    if not nb.ok:
        raise NumericError("measured deflection fails the load neighbourhood check")
    res = reconstruct_kappa(w_meas, problem.load, problem.material, problem.basis,
                            alpha=inv["alpha"], sigma=problem.sigma, kbar=problem.kbar,
                            mode=inv["mode"], exclude_radius=nb.sigma_bar_emp / 2, K=problem.K)
    summary = res.summary()
    summary["projection_lambda"] = w_meas.meta.get("projection_lambda")
    if truth is not None:
        summary["relative_error"] = kappa_error(res.kappa, truth, problem.domain, problem.sigma,
                                                problem.norm_cfg)
    res.to_csv(out / "kappa.csv")
    _write_json(out / "reconstruction.json", summary)
    if not args.no_plots:
        from .plotting import plot_field
        plot_field(res.kappa, problem.domain.Lx, problem.domain.Ly, out / "kappa.svg",
                   "reconstructed kappa", label="kappa")
    msg = f"alpha {res.alpha:g}  residual {res.residual:.3e}  tests {res.n_tests}"
    if truth is not None:
        msg += f"  relative error {summary['relative_error']:.3e}"
    print(msg)
    return EXIT_OK


def cmd_sweep(problem, out, args):
    from .harness import stability_sweep

    rep = stability_sweep(problem)
    rep.write(out)
    if not args.no_plots:
        from .plotting import plot_sweep
        plot_sweep(rep, out / "stability_sweep.svg")
    f = rep.fit
    print(f"slope b = {f['slope_b']:.4f}  in (0,1]: {f['b_in_unit_interval']}  "
          f"monotone: {f['monotone_within_factor_2']}  key estimate: {rep.key_estimate['passed']}")
    return EXIT_OK


def cmd_ucp(problem, out, args):
    from .harness import uc_report

    w = problem.solve(_truth(problem))
    summary, table = uc_report(w, problem, return_table=True)
    table.write(out / "ucp_table")
    _write_json(out / "ucp_summary.json", summary)
    print(f"propagation constant {summary['propagation_constant']:.6e}  "
          f"A_p constant {summary['ap_constant']:.6e}")
    return EXIT_OK


def cmd_norms(problem, out, args):
    from .norms import norm_report

    kappa = _truth(problem)
    w = problem.solve(kappa)
    recs = norm_report(w, problem.domain, problem.norm_cfg, problem.s)
    adm = problem.admissibility(kappa)
    _write_json(out / "norms.json", {"deflection": recs, "kappa_admissibility": adm})
    for r in recs:
        print(f"{r['norm']:>18s}  {r['value']:.6e}")
    return EXIT_OK


def cmd_material_check(problem, out, args):
    from .material import build_tensors, verify_convexity

    dom = problem.domain
    xs = np.linspace(0, dom.Lx, 5)
    ys = np.linspace(0, dom.Ly, 5)
    rows = []
    for x in xs:
        for y in ys:
            T = build_tensors(problem.material, (x, y))
            xi_p, xi_q = verify_convexity(T, problem.material)
            rows.append({"x": float(x), "y": float(y), "xi_P": xi_p, "xi_Q": xi_q})
    report = {"material": problem.material.describe(), "points": rows,
              "min_xi_P": min(r["xi_P"] for r in rows), "min_xi_Q": min(r["xi_Q"] for r in rows)}
    _write_json(out / "material_check.json", report)
    print(f"min xi_P {report['min_xi_P']:.6e}  min xi_Q {report['min_xi_Q']:.6e}")
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "reconstruct": cmd_reconstruct, "sweep": cmd_sweep,
            "ucp": cmd_ucp, "norms": cmd_norms, "material-check": cmd_material_check}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    from .config import load_config
    from .harness import Problem

    try:
        cfg, base_dir = load_config(args.config)
        if args.seed is not None:
            cfg["inverse"]["seed"] = args.seed
            cfg["sweep"]["seeds"] = [args.seed + i for i in range(len(cfg["sweep"]["seeds"]))]
        out = args.out if args.out is not None else base_dir / cfg["output"]["dir"]
        out.mkdir(parents=True, exist_ok=True)
        problem = Problem(cfg, base_dir)
        return HANDLERS[args.command](problem, out, args)
    except ValidationError as exc:
        print(f"nanoplate: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"nanoplate: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
