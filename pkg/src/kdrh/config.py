"""Runtime configuration read from the environment."""
import os


def budget_override():
    """Integer from ``KDRH_BUDGET`` if set, else None."""
    raw = os.environ.get("KDRH_BUDGET")
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"KDRH_BUDGET must be an integer, got {raw!r}")
    if value <= 0:
        raise ValueError("KDRH_BUDGET must be positive")
    return value
