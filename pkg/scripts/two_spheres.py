"""Two nearly touching drops: direct, uncorrected and corrected evaluation."""
import sys

from _common import run

H = [1 / 16, 1 / 32, 1 / 64]

if __name__ == "__main__":
    for mode in ["direct", "uncorrected", "corrected"]:
        levels = H if (mode == "corrected" or "--full" in sys.argv) else H[:2]
        run(f"two_spheres_{mode}", experiment="two-spheres", h=levels, mode=mode)
