"""Backend selection for the hot kernels.

The compiled core (``_core``) is used when it was built; otherwise, or when
``PKTEMBED_PURE=1`` is set, the numpy fallback (``_pycore``) is used. Both
expose the same functions.
"""
import logging
import os

from . import _pycore

log = logging.getLogger(__name__)

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _pycore}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Return a backend module by name; ``None`` picks the default."""
    if name is None:
        return active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available()})") from None


if os.environ.get("PKTEMBED_PURE") == "1" or _compiled is None:
    active = _pycore
else:
    active = _compiled

log.debug("pktembed kernel backend: %s", active.NAME)
