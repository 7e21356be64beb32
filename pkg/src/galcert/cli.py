"""Command-line interface.

Subcommands: simulate | potential | nve-check | monodromy | kovacic | certify.
Complex flag values are written as "re,im" pairs; an optional key=value
config file supplies defaults that explicit flags override.

Exit codes: 0 success, 1 internal error, 2 singular input, 3 verdict
contradiction (a verdict-bearing stage disagreeing with the expected
non-integrability outcome is flagged loudly rather than hidden).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, kovacic, monodromy, potential, variational
from .errors import GalcertError, SingularEncounter, SingularInput
from .report import RunConfig, build_report, emit_json

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_SINGULAR = 2
EXIT_CONTRADICTION = 3


def _parse_complex(text: str) -> complex:
    if "," in text:
        re_s, im_s = text.split(",", 1)
        return complex(float(re_s), float(im_s))
    return complex(float(text), 0.0)


def _parse_klist(text: str):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _load_config_file(path: str) -> dict:
    """key = value lines; '#' starts a comment; unknown keys are rejected."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        out[key] = val.strip('"')
    return out


_CONFIG_KEYS = {
    "energy": _parse_complex,
    "tol_quad": float,
    "tol_ode": float,
    "tol_monodromy": float,
    "basepoint": _parse_complex,
    "clearance": float,
    "k_list": _parse_klist,
    "seed": int,
    "out_dir": str,
    "orbit_start": float,
    "sim_T": float,
}


def make_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, val in _load_config_file(args.config).items():
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, _CONFIG_KEYS[key](val))
    mapping = {
        "energy": "energy",
        "tol_quad": "tol_quad",
        "tol_ode": "tol_ode",
        "tol_monodromy": "tol_monodromy",
        "basepoint": "basepoint",
        "clearance": "clearance",
        "k_list": "k_list",
        "seed": "seed",
        "out": "out_dir",
        "orbit_start": "orbit_start",
        "T": "sim_T",
    }
    for arg_name, cfg_name in mapping.items():
        val = getattr(args, arg_name, None)
        if val is not None:
            setattr(cfg, cfg_name, val)
    cfg.validate()
    return cfg


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override")
    p.add_argument("--energy", type=_parse_complex, help='energy parameter as "re,im"')
    p.add_argument("--tol-ode", dest="tol_ode", type=float)
    p.add_argument("--tol-quad", dest="tol_quad", type=float)
    p.add_argument("--tol-monodromy", dest="tol_monodromy", type=float)
    p.add_argument("--basepoint", type=_parse_complex)
    p.add_argument("--clearance", type=float)
    p.add_argument("--k-list", dest="k_list", type=_parse_klist)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def cmd_simulate(args) -> int:
    cfg = make_config(args)
    state = dynamics.PhaseState(args.q1, args.q2, args.p1, args.p2)
    try:
        traj = dynamics.integrate(state, cfg.sim_T, cfg.tol_ode)
    except SingularEncounter as exc:
        print(f"singular encounter at t = {exc.time}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    csv_text = dynamics.trajectory_csv(traj, cfg.tol_quad)
    path = _write(cfg, "trajectory.csv", csv_text)
    e0 = dynamics.hamiltonian(traj[0], cfg.tol_quad).real
    drift = max(abs(dynamics.hamiltonian(s, cfg.tol_quad).real - e0) for s in traj)
    leakage = max(abs(s.q1) + abs(s.p1) for s in traj)
    summary = {
        "rows": len(traj),
        "T": cfg.sim_T,
        "energy_initial": e0,
        "max_energy_drift": drift,
        "max_plane_leakage": leakage,
        "csv": str(path),
    }
    _write(cfg, "simulate_summary.json", emit_json(summary) + "\n")
    print(emit_json(summary))
    return EXIT_OK


def cmd_potential(args) -> int:
    cfg = make_config(args)
    cal = potential.calibrate()
    rows = []
    for q2 in args.q2_list:
        rows.append(
            {
                "q2": q2,
                "J_axis": potential.eval_J_xy(0.0, q2, cfg.tol_quad).real,
                "closed_form_scaled": (cal.c_potential * potential.axis_potential_printed(q2)).real,
                "F1_closed": potential.F1_closed(q2).real,
                "F1_quadrature": potential.F1_quadrature(q2, cfg.tol_quad).real,
            }
        )
    out = {
        "calibration": {"potential_constant": cal.c_potential, "f1_constant": cal.c_f1},
        "samples": rows,
    }
    _write(cfg, "potential.json", emit_json(out) + "\n")
    print(emit_json(out))
    return EXIT_OK


def cmd_nve_check(args) -> int:
    from .report import nve_comparison

    cfg = make_config(args)
    out = nve_comparison(cfg, cfg.orbit_start)
    _write(cfg, "nve.json", emit_json(out) + "\n")
    print(emit_json(out))
    return EXIT_OK


def cmd_monodromy(args) -> int:
    cfg = make_config(args)
    e = variational.limit_equation()
    if args.equation == "limit":
        gs = monodromy.generators(e, cfg.basepoint, cfg.tol_monodromy, cfg.clearance)
        big = monodromy.transport(e, monodromy.big_circle(cfg.basepoint), cfg.tol_monodromy, validate=False)
        prod_resid = float(np.linalg.norm(gs.product_of_finite() - big, 2))
        dev, devs = monodromy.derived_power_test([m.entries for m in gs.matrices], 2, 60, 50, cfg.seed)
        out = {
            "equation": "limit",
            "n_finite_generators": len(gs.matrices),
            "generators": [m.describe() for m in gs.matrices],
            "product_vs_infinity": prod_resid,
            "derived_power_depth2_pow60": dev,
            "derived_power_deviations": devs,
            "seed": cfg.seed,
        }
    elif args.equation == "family":
        k = args.k if args.k is not None else 0
        radius = 0.25
        circ = monodromy.LoopPath(radius + 0j, (monodromy.Arc(0j, radius, 0.0, 2 * math.pi),), 0j, 0.05)
        b_loc = variational.BranchState.at_real_point(radius)
        mk, _ = monodromy.transport_with_branch(
            monodromy.FamilyEquation(E=cfg.energy, k=k), circ, cfg.tol_monodromy, branch=b_loc
        )
        m_lim = monodromy.transport(e, circ, cfg.tol_monodromy)
        out = {
            "equation": f"family(E={cfg.energy}, k={k})",
            "loop": circ.describe(),
            "matrix": [[(mk[0, 0].real, mk[0, 0].imag), (mk[0, 1].real, mk[0, 1].imag)],
                       [(mk[1, 0].real, mk[1, 0].imag), (mk[1, 1].real, mk[1, 1].imag)]],
            "deviation_from_limit": float(np.linalg.norm(mk - m_lim, 2)),
        }
    else:
        raise ValueError("equation must be 'limit' or 'family'")
    _write(cfg, "monodromy.json", emit_json(out) + "\n")
    print(emit_json(out))
    return EXIT_OK


def cmd_kovacic(args) -> int:
    cfg = make_config(args)
    cert = kovacic.kovacic_run(variational.limit_equation())
    out = cert.describe()
    _write(cfg, "kovacic.json", emit_json(out) + "\n")
    print(emit_json(out))
    if not cert.is_sl2:
        print("verdict contradiction: expected GroupSL2", file=sys.stderr)
        return EXIT_CONTRADICTION
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = make_config(args)
    report = build_report(cfg)
    path = _write(cfg, "report.json", emit_json(report) + "\n")
    summary = {
        "report": str(path),
        "overall_verdict": report["overall_verdict"],
        "kovacic_verdict": report.get("kovacic", {}).get("verdict", {}).get("value"),
        "derived_power_deviation": report.get("monodromy", {})
        .get("derived_power_depth2_pow60", {})
        .get("value"),
        "discrepancies": len(report.get("discrepancies", [])),
        "failed_stages": report["failed_stages"],
    }
    print(emit_json(summary))
    if report["verdict_contradiction"]:
        print("verdict contradiction: the certification chain did not reach the expected outcome",
              file=sys.stderr)
        return EXIT_CONTRADICTION
    if report["failed_stages"]:
        return EXIT_INTERNAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="galcert",
        description="Non-integrability certification for the fluid-ellipsoid Hamiltonian",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the full system, write a CSV trajectory")
    _add_common(p)
    p.add_argument("--q1", type=float, default=0.0)
    p.add_argument("--q2", type=float, default=3.0)
    p.add_argument("--p1", type=float, default=0.0)
    p.add_argument("--p2", type=float, default=0.0)
    p.add_argument("-T", type=float, default=5.0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("potential", help="evaluate the potential oracles and calibration")
    _add_common(p)
    p.add_argument("--q2-list", dest="q2_list", type=lambda s: [float(x) for x in s.split(",")],
                   default=[2.5, 3.0, 4.0])
    p.set_defaults(fn=cmd_potential)

    p = sub.add_parser("nve-check", help="finite-difference oracle vs the variational equations")
    _add_common(p)
    p.add_argument("--orbit-start", dest="orbit_start", type=float)
    p.set_defaults(fn=cmd_nve_check)

    p = sub.add_parser("monodromy", help="monodromy generators and group tests")
    _add_common(p)
    p.add_argument("--equation", choices=("limit", "family"), default="limit")
    p.add_argument("--k", type=int, help="shift index for the family equation")
    p.set_defaults(fn=cmd_monodromy)

    p = sub.add_parser("kovacic", help="run the Liouvillian decision procedure")
    _add_common(p)
    p.set_defaults(fn=cmd_kovacic)

    p = sub.add_parser("certify", help="full pipeline; writes report.json")
    _add_common(p)
    p.add_argument("--orbit-start", dest="orbit_start", type=float)
    p.set_defaults(fn=cmd_certify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (SingularInput, SingularEncounter) as exc:
        print(f"singular input: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except GalcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
