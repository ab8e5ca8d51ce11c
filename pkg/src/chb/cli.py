"""Command line entry point: ``chb run|certify|validate|mms``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import config as cfgmod
from .errors import AbortRun, AssumptionError, CHBError, ConfigError, SolverError

EXIT_CODES = {ConfigError: 2, AssumptionError: 3, AbortRun: 4, SolverError: 5}


def _exit_code(exc):
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1


def _fail(exc, out=None):
    info = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "status.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    print(json.dumps(info), file=sys.stderr)
    return _exit_code(exc)


def _load(spec, seed=None, out=None):
    cfg = cfgmod.load(spec)
    if seed is not None:
        cfg = cfg.replace(seed=int(seed))
    if out is not None:
        cfg = cfg.replace(out=str(out))
    return cfg


def cmd_run(args):
    from . import run

    if args.config in cfgmod.MMS_PRESETS:
        return cmd_mms(argparse.Namespace(preset=args.config, out=args.out))
    out = args.out
    try:
        cfg = _load(args.config, args.seed, args.out)
        out = cfg.out

        def progress(step, t, dt):
            if not args.quiet and step % 100 == 0:
                print(f"step {step:6d}  t = {t:.6g}  dt = {dt:.3g}", file=sys.stderr)

        res = run.run(cfg, progress=progress)
        run.emit(res, out)
    except CHBError as exc:
        return _fail(exc, out)
    cert = res.certificate
    summary = {"status": res.status, "steps": res.steps, "t": res.trajectory.records[-1].t, "out": str(out)}
    if cert is not None:
        summary.update(delta=cert.delta, mode=cert.mode)
    if res.scan is not None:
        summary.update(scan_flag=res.scan.flag)
    print(json.dumps(summary))
    return 0


def cmd_certify(args):
    from . import run

    delta = "scan" if args.scan else args.delta
    try:
        cert, scan = run.certify_directory(args.trajdir, args.T, args.tau, delta, args.n_max)
    except (CHBError, OSError) as exc:
        return _fail(exc)
    if cert is None:
        print(json.dumps({"status": "error", "message": "no admissible delta"}), file=sys.stderr)
        return 1
    text = cert.to_json()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0 if cert.passed else 1


def cmd_validate(args):
    from . import kernel as kern
    from . import material as mat
    from .grid import Grid2D

    try:
        cfg = _load(args.config)
        g = cfg.grid
        kernel = kern.build(Grid2D(g.nx, g.ny, g.lx, g.ly), cfg.kernel.kernel, cfg.kernel.kernel_amp,
                            cfg.kernel.kernel_eps)
        a = kern.a_field(kernel).values
        m = cfg.material
        model = mat.make_model(m.potential, m.mobility, m.theta, m.m0, m.theta_c)
        report = mat.validate_assumptions(model, float(a.min()), float(a.max()))
    except CHBError as exc:
        return _fail(exc)
    print(report.summary())
    return 0 if report.passed else 3


def cmd_mms(args):
    from . import mms

    studies = mms.run_preset(args.preset)
    ok = True
    for s in studies:
        for n, e in zip(s.ns, s.errors):
            print(f"{s.name:22s} n={n:4d}  L2 error {e:.6e}")
        print(f"{s.name:22s} ratios {', '.join(f'{r:.4f}' for r in s.ratios)}")
        ok &= all(3.2 <= r <= 4.8 for r in s.ratios)
    if getattr(args, "out", None):
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "mms.json").write_text(
            json.dumps([s.to_dict() for s in studies], indent=2) + "\n")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="chb", description="Nonlocal Cahn-Hilliard-Brinkman simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config file or a named preset")
    r.add_argument("config", help=f"config file or preset ({', '.join(cfgmod.PRESETS)})")
    r.add_argument("--out", help="output directory (overrides [output] out)")
    r.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="separation analysis of an emitted run directory")
    c.add_argument("trajdir")
    c.add_argument("--T", type=float, required=True)
    c.add_argument("--tau", type=float, required=True)
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta", type=float)
    g.add_argument("--scan", action="store_true")
    c.add_argument("--n-max", type=int, default=None)
    c.add_argument("--out", help="write the certificate JSON here as well")
    c.set_defaults(func=cmd_certify)

    v = sub.add_parser("validate", help="check the structural assumptions of a config")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    m = sub.add_parser("mms", help="manufactured-solution convergence study")
    m.add_argument("preset", choices=cfgmod.MMS_PRESETS)
    m.add_argument("--out")
    m.set_defaults(func=cmd_mms)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
