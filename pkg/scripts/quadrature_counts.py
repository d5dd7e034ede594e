"""Node counts and surface areas for the four test surfaces."""
from _common import run

H = [1 / 16, 1 / 32, 1 / 64]

if __name__ == "__main__":
    for surface in ["sphere", "spheroid:a=1,b=0.5", "ellipsoid", "molecule"]:
        run(f"quadpts_{surface.split(':')[0]}", experiment="quadpts", surface=surface, h=H)
