"""Backend selection for the simulation kernels.

The compiled extension is used when it imports; ``EDSS_MARKOV_PURE=1`` forces
the numpy fallback.  Both produce identical output for identical inputs.
"""

import os

from . import _purepy

if os.environ.get("EDSS_MARKOV_PURE") == "1":
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

BACKENDS = {"python": _purepy}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def simulate_panel(*args, backend=None, **kwargs):
    mod = BACKENDS[backend or BACKEND]
    return mod.simulate_panel(*args, **kwargs)
