"""Near-surface single-layer error on the unit sphere as a function of delta/h."""
from _common import run

if __name__ == "__main__":
    for corrections in (True, False):
        tag = "corrected" if corrections else "uncorrected"
        run(f"delta_sweep_{tag}", experiment="delta-sweep", surface="sphere", h=[1 / 64],
            corrections=corrections)
