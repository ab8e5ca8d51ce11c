"""Re-run the separation scan on an emitted run directory and print the table.

    python scripts/scan_delta.py out/spinodal --T 10 --tau 1
"""
import argparse

from chb import run


def main():
    p = argparse.ArgumentParser()
    p.add_argument("trajdir")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--rows", type=int, default=15, help="how many of the largest deltas to print")
    args = p.parse_args()

    cert, scan = run.certify_directory(args.trajdir, args.T, args.tau, "scan", args.n_max)
    print(f"delta = {scan.delta}  flag = {scan.flag}  empirical delta = {scan.empirical_delta:.6g}")
    print(f"{'delta':>10s} {'passed':>7s} {'mode':>10s} {'all y=0':>8s} {'monotone':>9s}")
    for r in sorted(scan.rows, key=lambda r: -r["delta"])[: args.rows]:
        print(f"{r['delta']:10.5f} {str(r['passed']):>7s} {r['mode']:>10s} {str(r['y_zero']):>8s} "
              f"{str(r['y_monotone']):>9s}")
    if cert is not None:
        print(f"certificate: mode {cert.mode}, passed {cert.passed}")


if __name__ == "__main__":
    main()
