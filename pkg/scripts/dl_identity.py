"""Double layer of the rotational density against the stresslet identity."""
from _common import run

H = [1 / 16, 1 / 32, 1 / 64]

if __name__ == "__main__":
    for surface in ["sphere", "ellipsoid"]:
        tag = surface.split(":")[0]
        run(f"dl_identity_{tag}_on", experiment="dl-identity", surface=surface, h=H, mode="on")
        run(f"dl_identity_{tag}_near", experiment="dl-identity", surface=surface, h=H, mode="near")
