"""Pin BLAS pools to one thread per process.

Every dense solve here is a 131-parameter normal equation; BLAS thread
fan-out on matrices this small costs far more than it saves and makes
timings erratic. Parallelism in this package happens at the level of
independent experiment grid points instead (the --threads CLI flag).
Set PARASTIFF_BLAS_THREADS to override.
"""

from __future__ import annotations

import os

_limiter = None  # keeps the threadpoolctl limit alive for the process


def limit_blas_threads(n: int | None = None) -> None:
    global _limiter
    if n is None:
        n = int(os.environ.get("PARASTIFF_BLAS_THREADS", "1"))
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    try:
        from threadpoolctl import threadpool_limits

        _limiter = threadpool_limits(limits=n, user_api="blas")
    except Exception:  # threadpoolctl absent: the env vars above still help
        pass
