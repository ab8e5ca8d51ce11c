"""Manufactured-solution convergence studies for the Brinkman and Cahn-Hilliard solvers.

    python scripts/mms_convergence.py
"""
from chb import mms


def show(study):
    print(study.name)
    for n, e in zip(study.ns, study.errors):
        print(f"  n = {n:4d}   L2 error {e:.4e}")
    print("  ratios " + ", ".join(f"{r:.3f}" for r in study.ratios))


def main():
    show(mms.brinkman_study((32, 64, 128), "divgrad"))
    show(mms.brinkman_study((32, 64, 128), "symgrad"))
    show(mms.ch_study((16, 32, 64)))


if __name__ == "__main__":
    main()
