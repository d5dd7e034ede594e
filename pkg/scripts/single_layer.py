"""Single layer of the translating sphere/spheroid: on the surface and near it."""
from _common import run

H = [1 / 16, 1 / 32, 1 / 64]

if __name__ == "__main__":
    for surface in ["sphere", "spheroid:a=1,b=0.5"]:
        tag = surface.split(":")[0]
        run(f"single_layer_{tag}_on", experiment="single-layer", surface=surface, h=H, mode="on")
        run(f"single_layer_{tag}_near", experiment="single-layer", surface=surface, h=H, mode="near")
        run(f"single_layer_{tag}_near_uncorrected", experiment="single-layer", surface=surface,
            h=H, mode="near", corrections=False)
