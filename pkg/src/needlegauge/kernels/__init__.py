"""Hot-loop kernels: compiled extension when available, pure Python otherwise.

`KERNEL_BACKEND` reports which implementation was selected at import time
("compiled" or "python"). Both produce bit-identical results; the compiled
one is just fast enough for large extraction runs where the pairwise
redundancy scan is quadratic in the entity count.
"""

from __future__ import annotations

try:
    from needlegauge.kernels._redundancy import mask_first_redundant

    KERNEL_BACKEND = "compiled"
except ImportError:  # extension not built; fall back to pure Python
    from needlegauge.kernels.pyfallback import mask_first_redundant

    KERNEL_BACKEND = "python"

__all__ = ["mask_first_redundant", "KERNEL_BACKEND", "available_backends"]


def available_backends() -> dict[str, object]:
    """Every importable kernel implementation, keyed by backend name."""
    from needlegauge.kernels import pyfallback

    backends: dict[str, object] = {"python": pyfallback.mask_first_redundant}
    try:
        from needlegauge.kernels import _redundancy

        backends["compiled"] = _redundancy.mask_first_redundant
    except ImportError:
        pass
    return backends
