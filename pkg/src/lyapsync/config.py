"""Flat key = value configuration files.

The format is deliberately minimal: one `section.key = value` pair per
line, `#` comments, blank lines ignored.  Unknown keys are hard errors so
that manifests stay trustworthy; a resolved configuration re-emitted with
:func:`emit_config` parses back to an equal object.

Documented keys (defaults in parentheses):

  potential.name        (sombrero)   catalog entry
  potential.params      ()           space/comma separated k=v pairs, e.g. "n=3 a=1"
  grid.N                (256)        grid size, power of two >= 8
  sim.kappa             (8.0)        viscosity > 0
  sim.epsilon           (0.05)       noise intensity in [0, 1]
  sim.dt                (1e-3)       time step > 0
  sim.T                 (50.0)       horizon > 0
  sim.scheme            (exponential_euler | semi_implicit_euler)
  sim.rescaled          (false)      slow-motion clock t -> t/epsilon
  sim.dealias           (false)      2/3 dealiasing of the drift
  init.kind             (minimum)    minimum | zero | ball
  init.radius           (2.0)        sup-norm radius for init.kind = ball
  lyap.renorm_every     (100)        steps between tangent renormalizations
  lyap.burn_in          (0.1)        discarded fraction of the horizon
  lyap.batches          (20)         batch-means batches
  theory.c_star         (0.5)        Sobolev constant for the bounds
  theory.m_trunc        (10000)      mode-product truncation
  theory.kappa_rule     (max)        max | product reading of the viscosity floor
  experiment.k_points   (5)          shared-noise ensemble size
  experiment.radius     (2.0)        sampler sup-norm radius
  experiment.pullback_starts (25,50,100)
  experiment.delta      (0.25)       concentration distance threshold
  sweep.kappa           ()           comma list; empty = sim.kappa only
  sweep.epsilon         ()           comma list; empty = sim.epsilon only
  sweep.seeds           (1)          number of seeds, offsets from `seed`
  seed                  (0)          master seed (lowest precedence source:
                                     LYAPSYNC_SEED, then file, then --seed)
"""

import math

from .errors import OutOfRangeError, ParseError, UnknownKeyError

_STR = "str"
_INT = "int"
_FLOAT = "float"
_BOOL = "bool"
_FLOATS = "float_list"
_PARAMS = "params"

# key -> (type, default)
SCHEMA = {
    "potential.name": (_STR, "sombrero"),
    "potential.params": (_PARAMS, {}),
    "grid.N": (_INT, 256),
    "sim.kappa": (_FLOAT, 8.0),
    "sim.epsilon": (_FLOAT, 0.05),
    "sim.dt": (_FLOAT, 1e-3),
    "sim.T": (_FLOAT, 50.0),
    "sim.scheme": (_STR, "exponential_euler"),
    "sim.rescaled": (_BOOL, False),
    "sim.dealias": (_BOOL, False),
    "init.kind": (_STR, "minimum"),
    "init.radius": (_FLOAT, 2.0),
    "lyap.renorm_every": (_INT, 100),
    "lyap.burn_in": (_FLOAT, 0.1),
    "lyap.batches": (_INT, 20),
    "theory.c_star": (_FLOAT, 0.5),
    "theory.m_trunc": (_INT, 10_000),
    "theory.kappa_rule": (_STR, "max"),
    "experiment.k_points": (_INT, 5),
    "experiment.radius": (_FLOAT, 2.0),
    "experiment.pullback_starts": (_FLOATS, (25.0, 50.0, 100.0)),
    "experiment.delta": (_FLOAT, 0.25),
    "sweep.kappa": (_FLOATS, ()),
    "sweep.epsilon": (_FLOATS, ()),
    "sweep.seeds": (_INT, 1),
    "seed": (_INT, 0),
}


class ResolvedConfig:
    """Fully defaulted configuration; attribute names replace dots with
    underscores (resolved.sim_kappa etc.)."""

    def __init__(self, entries):
        self._entries = dict(entries)
        for key, value in self._entries.items():
            setattr(self, key.replace(".", "_"), value)

    def get(self, key):
        return self._entries[key]

    def items(self):
        return self._entries.items()

    def __eq__(self, other):
        return isinstance(other, ResolvedConfig) and other._entries == self._entries

    def __repr__(self):
        return f"ResolvedConfig({self._entries!r})"


def _parse_value(kind, raw, line_number):
    raw = raw.strip()
    try:
        if kind == _STR:
            return raw
        if kind == _INT:
            return int(raw)
        if kind == _FLOAT:
            return float(raw)
        if kind == _BOOL:
            lowered = raw.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == _FLOATS:
            if not raw:
                return ()
            return tuple(float(part) for part in raw.replace(",", " ").split())
        if kind == _PARAMS:
            params = {}
            for part in raw.replace(",", " ").split():
                if "=" not in part:
                    raise ValueError(part)
                name, value = part.split("=", 1)
                params[name.strip()] = float(value)
            return params
    except ValueError as err:
        raise ParseError(line_number, f"cannot parse value {raw!r}: {err}") from None
    raise ParseError(line_number, f"unhandled kind {kind!r}")


def _check_ranges(entries):
    def require(key, ok, constraint):
        if not ok:
            raise OutOfRangeError(key, entries[key], constraint)

    n_points = entries["grid.N"]
    require("grid.N", n_points >= 8 and (n_points & (n_points - 1)) == 0,
            "power of two >= 8")
    require("sim.kappa", entries["sim.kappa"] > 0, "> 0")
    require("sim.epsilon", 0.0 <= entries["sim.epsilon"] <= 1.0, "in [0, 1]")
    require("sim.dt", entries["sim.dt"] > 0 and math.isfinite(entries["sim.dt"]), "> 0")
    require("sim.T", entries["sim.T"] > 0, "> 0")
    require("sim.scheme", entries["sim.scheme"] in
            ("exponential_euler", "semi_implicit_euler"),
            "exponential_euler | semi_implicit_euler")
    require("sim.rescaled", not (entries["sim.rescaled"] and entries["sim.epsilon"] == 0),
            "rescaled clock needs epsilon > 0")
    require("init.kind", entries["init.kind"] in ("minimum", "zero", "ball"),
            "minimum | zero | ball")
    require("init.radius", entries["init.radius"] > 0, "> 0")
    require("lyap.renorm_every", entries["lyap.renorm_every"] >= 1, ">= 1")
    require("lyap.burn_in", 0.0 <= entries["lyap.burn_in"] < 1.0, "in [0, 1)")
    require("lyap.batches", entries["lyap.batches"] >= 2, ">= 2")
    require("theory.c_star", entries["theory.c_star"] > 0, "> 0")
    require("theory.m_trunc", entries["theory.m_trunc"] >= 100, ">= 100")
    require("theory.kappa_rule", entries["theory.kappa_rule"] in ("max", "product"),
            "max | product")
    require("experiment.k_points", entries["experiment.k_points"] >= 1, ">= 1")
    require("experiment.radius", entries["experiment.radius"] > 0, "> 0")
    require("experiment.delta", entries["experiment.delta"] > 0, "> 0")
    require("sweep.seeds", entries["sweep.seeds"] >= 1, ">= 1")
    for key in ("sweep.kappa",):
        require(key, all(k > 0 for k in entries[key]), "> 0")
    for key in ("sweep.epsilon",):
        require(key, all(0 <= e <= 1 for e in entries[key]), "in [0, 1]")
    require("experiment.pullback_starts",
            all(t >= 0 for t in entries["experiment.pullback_starts"]), ">= 0")
    require("seed", entries["seed"] >= 0, ">= 0 (64-bit)")


def parse_config(source, default_seed=None):
    """Parse text or a file path into a ResolvedConfig.

    `default_seed` (e.g. from the environment) applies only when the file
    does not set `seed`.
    """
    import os
    if hasattr(source, "read"):
        text = source.read()
    elif "\n" not in str(source) and os.path.exists(source):
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    else:
        text = str(source)
    entries = {key: default for key, (_, default) in SCHEMA.items()}
    seen_seed = False
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(line_number, f"expected 'key = value', got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in SCHEMA:
            raise UnknownKeyError(line_number, key)
        kind, _ = SCHEMA[key]
        entries[key] = _parse_value(kind, raw, line_number)
        if key == "seed":
            seen_seed = True
    if not seen_seed and default_seed is not None:
        entries["seed"] = int(default_seed)
    _check_ranges(entries)
    return ResolvedConfig(entries)


def _format_value(kind, value):
    if kind == _BOOL:
        return "true" if value else "false"
    if kind == _FLOATS:
        return ",".join(repr(float(v)) for v in value)
    if kind == _PARAMS:
        return " ".join(f"{k}={repr(float(v))}" for k, v in sorted(value.items()))
    if kind == _FLOAT:
        return repr(float(value))
    return str(value)


def emit_config(resolved):
    """Serialize so that parse_config(emit_config(r)) == r."""
    lines = []
    for key in SCHEMA:
        kind, _ = SCHEMA[key]
        lines.append(f"{key} = {_format_value(kind, resolved.get(key))}")
    return "\n".join(lines) + "\n"
