"""Off-curve residuals against Gaussian curvature over a family of metrics.

    python scripts/curvature_sweep.py configs/sweep.toml
"""
import argparse
from pathlib import Path

from isoembed.pipeline import PipelineConfig, sweep, write_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("config")
    p.add_argument("--csv", default=None)
    args = p.parse_args()
    cfg = PipelineConfig.from_toml(args.config)
    rows = sweep(cfg)
    path = Path(args.csv or Path(cfg.out) / "sweep.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_sweep(rows, path)
    print(f"{'ghat':22s} {'delta':>7s} {'s_end':>7s} {'K range':>18s} {'on-curve':>9s} {'off-curve':>9s}")
    for r in rows:
        if not r["completed"]:
            print(f"{r['ghat']:22s} error: {r['error']}")
            continue
        K = f"[{r['K_min']:.2g}, {r['K_max']:.2g}]"
        print(f"{r['ghat']:22s} {r['delta']:7.4g} {r['s_end']:7.3f} {K:>18s} {r['on_curve_max']:9.1e} {r['off_curve_max']:9.1e}")
    print(f"table written to {path}")


if __name__ == "__main__":
    main()
