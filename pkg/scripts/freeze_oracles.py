"""Recompute the frozen reference values in tests/oracles.py at 40 digits.

Run with ``--check`` to compare against the frozen file instead of printing it.
"""
import argparse
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40


def oracle_values():
    eps_a, eps_b = mp.mpf(1) / 2, mp.mpf("0.7")
    out = {
        "COSH1_SQUARED": mp.cosh(1) ** 2,
        "E_ONE": mp.e,
        # a = id, b = slope sqrt(eps^-2 - 2) inverse for the worked example
        "B_SLOPE_EPS_HALF": (eps_a ** -2 - 2) ** mp.mpf(-0.5),
        "B_SLOPE_EPS_0_7": (eps_b ** -2 - 2) ** mp.mpf(-0.5),
        "MARGIN_EPS_0_8": (mp.mpf("0.8") ** -2) / 2 - 1,
        "REALITY_THRESHOLD": mp.sqrt(2) / 2,
        # standard form at Ghat = 3, hhat_vh = -0.1, u_vh = 1
        "A_PRIME_G3": mp.sqrt(mp.mpf(4) / 6),
        "B_PRIME_G3": (2 * (mp.mpf(100) * 9 / 4 - 1)) ** mp.mpf(-0.5),
        # Ghat = uhat, hhat = delta*s: v_uh(1.5, 0.2) / delta
        "EXP_MINUS_0_2": mp.exp(mp.mpf("-0.2")),
        # Ghat = cos^2: K = -(sqrt G)''/sqrt G at uhat = 0.3
        "K_COS2": -mp.diff(lambda t: mp.sqrt(mp.cos(t) ** 2), mp.mpf("0.3"), 2) / mp.cos(mp.mpf("0.3")),
        "K_EXP2": -mp.diff(lambda t: mp.exp(t), mp.mpf("0.3"), 2) / mp.exp(mp.mpf("0.3")),
    }
    return {k: float(v) for k, v in out.items()}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    vals = oracle_values()
    if not args.check:
        for k, v in vals.items():
            print(f"{k} = {v!r}")
        return 0
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
    import oracles

    bad = [k for k, v in vals.items() if getattr(oracles, k) != v]
    for k in bad:
        print(f"mismatch {k}: frozen {getattr(oracles, k)!r}, recomputed {vals[k]!r}")
    print("ok" if not bad else f"{len(bad)} mismatches")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
