"""Check how generous the [0.7, 1.3] band on mean |h|^2 is for K=3, M=4.

Each draw averages 144 CN(0, 1) entries; the script reports the spread of
that average over many seeds and the fraction falling outside the band.
"""

import argparse

import numpy as np

from iac.system_model import SystemConfig, generate_channels


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=2000)
    args = p.parse_args()
    cfg = SystemConfig(3, 4, (1, 1, 1))
    means = np.array([np.mean(np.abs(generate_channels(cfg, s).H) ** 2)
                      for s in range(args.seeds)])
    outside = np.mean((means < 0.7) | (means > 1.3))
    print(f"seeds={args.seeds} mean={means.mean():.4f} std={means.std():.4f} "
          f"min={means.min():.4f} max={means.max():.4f} outside_band={outside:.4%}")


if __name__ == "__main__":
    main()
