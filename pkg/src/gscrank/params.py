"""Built-in (mu, lambda) defaults per task, setting and exponent."""

import json
from functools import lru_cache
from importlib import resources

_P_KEYS = {0.5: "0.5", 2.0 / 3.0: "0.6667"}


@lru_cache(maxsize=1)
def load_parameter_tables():
    text = resources.files("gscrank").joinpath("data/parameters.json").read_text()
    return json.loads(text)["tasks"]


def p_key(p):
    for value, key in _P_KEYS.items():
        if abs(p - value) < 1e-3:
            return key
    raise KeyError(f"no built-in parameters for p={p}; pass --mu and --lam")


def setting_key(task, setting):
    """Normalize a task setting (subrate, fraction, kernel name) to a table key."""
    if task == "textremove":
        return "text"
    if task == "deblur":
        # "uniform9", "gaussian:25:1.6" and "motion,20,45" share their family's entry
        name = str(setting).lower().replace(",", ":").split(":")[0]
        return name.rstrip("0123456789")
    return f"{float(setting):g}"


def lookup(task, setting, p):
    """Return ``(mu, lam)`` for a task; raises KeyError when no entry exists."""
    tables = load_parameter_tables()
    if task not in tables:
        raise KeyError(f"no built-in parameters for task {task!r}")
    settings = tables[task]["settings"]
    key = setting_key(task, setting)
    if key not in settings:
        raise KeyError(f"no built-in parameters for {task} setting {setting!r}; "
                       f"known: {sorted(settings)}")
    mu, lam = settings[key][p_key(p)]
    return float(mu), float(lam)


def default_patch_side(task):
    return load_parameter_tables().get(task, {}).get("patch_side", 8)


def default_stride(patch_side):
    return 5 if patch_side >= 10 else 4
