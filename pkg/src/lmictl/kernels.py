"""Backend selection for the Monte Carlo hot loop.

The compiled extension is used when it was built; set ``LMICTL_PURE_PYTHON=1``
to force the NumPy implementation.
"""

import os

from ._rollout_py import rollout_costs as rollout_costs_py

rollout_costs_compiled = None
if not os.environ.get("LMICTL_PURE_PYTHON"):
    try:
        from ._rollout import rollout_costs as rollout_costs_compiled
    except ImportError:
        rollout_costs_compiled = None

rollout_costs = rollout_costs_compiled or rollout_costs_py
BACKEND = "cython" if rollout_costs_compiled is not None else "python"
