import os

# Global comparison tolerance for metric axioms, compliance and assertions.
TOL = 1e-9

DEFAULT_CAP_ATOMS = 2_000_000_000
DEFAULT_CAP_POINTS = 100_000
# largest dense intermediate (elements) before the dense evaluator loops
DENSE_CHUNK = 1 << 22


class ResourceError(RuntimeError):
    """A configured size or work cap would be exceeded."""


def cap_atoms(override=None) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get("CLW_CAP_ATOMS")
    return int(float(env)) if env else DEFAULT_CAP_ATOMS


def set_tol(value: float) -> None:
    """Override the tolerance everywhere it was imported by value."""
    import sys
    global TOL
    TOL = float(value)
    for name, mod in list(sys.modules.items()):
        if name.startswith("clw.") and hasattr(mod, "TOL"):
            mod.TOL = TOL
