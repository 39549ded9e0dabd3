"""Backend selection: compiled kernels when available, pure numpy otherwise.

The compiled extension is optional (see setup.py); importing it is attempted
once here.  ``resolve_backend`` turns a user-facing backend name into one of
the two concrete implementations.
"""

from __future__ import annotations

from fcskit import _pure

try:
    from fcskit import _kernels  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build environment
    _kernels = None
    HAVE_COMPILED = False

DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"

_NAMES = ("auto", "compiled", "python")


def resolve_backend(name: str | None = None) -> str:
    """Map a backend request to "compiled" or "python".

    "auto" (and None) prefer the compiled kernels; asking for "compiled" when
    the extension failed to build raises RuntimeError rather than silently
    degrading, since benchmark and acceptance timings depend on it.
    """
    if name is None:
        name = "auto"
    if name not in _NAMES:
        raise ValueError(f"unknown backend {name!r}; expected one of {_NAMES}")
    if name == "auto":
        return DEFAULT_BACKEND
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernels are not available; rebuild the extension")
    return name


def kernels(backend: str):
    """Return the module implementing the selected backend's kernels."""
    if resolve_backend(backend) == "compiled":
        return _kernels
    return _pure
