"""Shared helpers for the experiment scripts."""
import logging
import os
from pathlib import Path

from stokesreg.experiments import ExperimentConfig, run_experiment

RESULTS = Path(os.environ.get("STOKESREG_RESULTS", Path(__file__).resolve().parent.parent / "results"))


def run(name, **kwargs):
    """Run one configuration, write results/<name>.csv and print the summary rows."""
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    RESULTS.mkdir(parents=True, exist_ok=True)
    path = RESULTS / f"{name}.csv"
    res = run_experiment(ExperimentConfig(output=str(path), **kwargs))
    print(f"== {name}")
    for lv in res.levels:
        err = "" if lv.max_error is None else f" max={lv.max_error:.3e} l2={lv.l2_error:.3e}"
        extra = " ".join(f"{k}={v}" for k, v in lv.extra.items() if k != "trace")
        print(f"  h={lv.h:g} nodes={lv.nodes} targets={lv.targets}{err} {extra}")
    for key, orders in res.orders.items():
        print(f"  order_{key}: " + ", ".join("undefined" if o is None else f"{o:.2f}" for o in orders))
    return res
