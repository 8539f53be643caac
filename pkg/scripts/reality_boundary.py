"""Scan the worked example's initial reality margin over the slope and bisect its zero."""
import argparse

import numpy as np

from isoembed.verify import reality_boundary, reality_margin_at_origin


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--points", type=int, default=11)
    args = p.parse_args()
    for eps in np.linspace(0.5, 1.0, args.points):
        print(f"eps={eps:.3f}  S-1 at s=0: {reality_margin_at_origin(eps):+.6f}")
    eps_star = reality_boundary(tol=args.tol)
    print(f"boundary {eps_star:.8f}   2^-1/2 = {2 ** -0.5:.8f}   diff {eps_star - 2 ** -0.5:+.2e}")


if __name__ == "__main__":
    main()
