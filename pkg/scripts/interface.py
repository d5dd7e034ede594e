"""Interface velocity for one drop (sphere, ellipsoid, ellipsoid with a fine single layer)."""
import sys

from _common import run

H = [1 / 16, 1 / 32, 1 / 64]

if __name__ == "__main__":
    levels = H if "--full" in sys.argv else H[:2]
    run("interface_sphere", experiment="interface", surface="sphere", h=levels)
    run("interface_ellipsoid", experiment="interface", surface="ellipsoid", h=levels)
    run("interface_ellipsoid_fine_sl", experiment="interface", surface="ellipsoid", h=levels,
        sl_fine_h=1 / 256)
