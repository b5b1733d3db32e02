"""
Random probes of the multilinear estimates
==========================================

Ratios of the form ||d_x(uv)||_{X_{s,b-1}} / (||u||_{X_{s,b'}} ||v||_{X_{s,b'}})
over random band-limited fields.  The constants are not asserted, only
that the worst ratio stays put as the grid is refined.
"""
from dataclasses import replace

import numpy as np

from kdvk import make_grid
from kdvk.gevrey import sine_damping
from kdvk.probe import ProbeConfig, probe_bilinear, probe_damping_product, probe_weight_inequality, sweep_b

cfg = ProbeConfig(n_samples=50)
for name, rep in [("bilinear", probe_bilinear(cfg)),
                  ("damping", probe_damping_product(cfg, sine_damping(make_grid(256, cfg.period), 1.0, 0.5, 0.25)))]:
    print(f"{name:9s} max ratio per grid {np.round(rep.refinement_trend, 6)}  stable: {rep.passed}")

# how the bilinear constant moves with b
print("bilinear max ratio vs b:", {b: round(t[-1], 6) for b, t in sweep_b("bilinear", replace(cfg, n_samples=20)).items()})

# <x+y>^b <= C <x>^a <y>^b needs |b| <= a; outside that the constant keeps growing
for a, b in [(1, 1), (1, -1), (0.5, -1)]:
    w = probe_weight_inequality(a, b)
    print(f"a={a}, b={b}: max ratio {w['max_ratio']:.3f}, doubled range {w['max_ratio_doubled']:.3f}")
