"""Small transport convergence study with the shipped smooth network.

A reduced version of the convergence presets: integrates to T = 0.5 on a
short grid of step counts with the adaptive regularization policy and
prints the observed orders. The full studies live in configs/ and are run
through the CLI.
"""

from dataclasses import replace

import parastiff as ps
from parastiff.experiments import build_context, integrate_run, load_config, loglog_slope

for method, name in (("euler", "implicit Euler"), ("midpoint", "implicit midpoint"),
                     ("radau2", "Radau IIA-2")):
    cfg = load_config(f"configs/transport-{method}-smooth.cfg")
    cfg = replace(cfg, T=0.5, step_counts=(8, 16, 32))
    ctx = build_context(cfg)
    stats = [integrate_run(ctx, n) for n in cfg.step_counts]
    hs = [s.h for s in stats]
    errs = [s.l2_error for s in stats]
    slope = loglog_slope(hs, errs)
    print(f"{name:18s} errors at h = {['%.3f' % h for h in hs]}: "
          f"{['%.2e' % e for e in errs]} -> observed order {slope:.2f}")
