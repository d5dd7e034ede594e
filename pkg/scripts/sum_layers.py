"""Sum of single and double layers with point-force jump data."""
from _common import run

H = [1 / 16, 1 / 32, 1 / 64]

if __name__ == "__main__":
    for surface in ["sphere", "ellipsoid", "molecule"]:
        for mode in ["on", "near"]:
            run(f"sum_layers_{surface}_{mode}", experiment="sum-layers", surface=surface, h=H, mode=mode)
