"""Backend selection: compiled Cython kernels with a pure NumPy fallback.

The compiled extension ``irrsub._kernels`` accelerates the three hot loops
(subgraph degree counting, order-type enumeration, martingale traces).  If it
is absent or disabled, every caller falls back to vectorized NumPy/SciPy code
that produces the same results (bit-identical for integer outputs, equal to
float rounding for trace quantities).

Selection order: explicit ``backend=`` argument at a call site, then
:func:`set_backend`, then the ``IRRSUB_BACKEND`` environment variable, then
"compiled" when the extension imported cleanly.
"""

from __future__ import annotations

import os

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:
    _kernels = None

_VALID = ("auto", "pure", "compiled")
_selected = os.environ.get("IRRSUB_BACKEND", "auto").lower()
if _selected not in _VALID:
    raise RuntimeError(f"IRRSUB_BACKEND must be one of {_VALID}, got {_selected!r}")


def available_backends() -> tuple[str, ...]:
    return ("pure", "compiled") if _kernels is not None else ("pure",)


def set_backend(name: str) -> None:
    """Force a backend process-wide ("auto", "pure" or "compiled")."""
    global _selected
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "compiled" and _kernels is None:
        raise RuntimeError("compiled backend requested but irrsub._kernels is not importable")
    _selected = name


def backend_name(override: str | None = None) -> str:
    """Resolve the effective backend name ("pure" or "compiled")."""
    choice = override or _selected
    if choice not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {choice!r}")
    if choice == "auto":
        return "compiled" if _kernels is not None else "pure"
    if choice == "compiled" and _kernels is None:
        raise RuntimeError("compiled backend requested but irrsub._kernels is not importable")
    return choice


def kernels(override: str | None = None):
    """Return the compiled kernel module, or None if the pure path applies."""
    return _kernels if backend_name(override) == "compiled" else None
