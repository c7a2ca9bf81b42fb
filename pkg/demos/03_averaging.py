"""Averaging: as eps -> 0 the field flattens onto the scalar process v(t).

A reduced version of the rate benchmark (fewer replicas, coarser dt) so it
runs in a few seconds.  The full benchmark is
``fastavg converge --config configs/converge_benchmark.json``.
"""
import numpy as np

from fastavg import experiments as ex
from fastavg.config import parse_config

doc = {
    "operator": {"domain": [0, "pi"], "a": 1.0},
    "coefficients": {"f": {"family": "relaxation", "rate": 1.0, "target": 1.0}, "g": 0.5, "sigma": 0.5},
    "noise": {"seed": 2024},
    "discretization": {"K": 32, "grid_n": 128, "dt": 1e-3, "T": 1.0, "u0": 1.0},
    "experiment": {"eps_ladder": [0.25, 0.0625, 0.015625], "replicas": 40, "batch_size": 40},
}
rep = ex.run_converge(parse_config(doc))
for e, r in zip(rep.eps, rep.rms):
    print(f"eps={e:<9g} RMS sup_t |u - v|_Hmu = {r:.4f}")
print(f"fitted slope {rep.slope:.3f} (theory about 1/2)")
