"""Run configuration: a flat YAML document with dotted keys.

Nested sections (``space: {p: 2}``) and a handful of bare shorthands
(``p``, ``dim``, ``n_points``, ``space: lp``, ``sequence: unit-basis``)
are accepted and folded into the dotted form.  Unknown keys are errors.
"""

from dataclasses import dataclass, field
import math

import yaml

from .errors import ConfigError

SPACE_KINDS = ("lp", "custom-smooth")
SEQUENCE_KINDS = ("unit-basis", "perturbed-basis", "block")

# key -> (type, default); None means required
SCHEMA = {
    "space.kind": (str, "lp"),
    "space.p": (float, 2.0),
    "space.dim": (int, None),
    "space.gradient_step": (float, 1e-6),
    "sequence.kind": (str, "unit-basis"),
    "sequence.beta": (float, 0.5),
    "sequence.block": (int, 1),
    "builder.n_points": (int, None),
    "builder.prop_tol": (float, 1e-7),
    "builder.final_tol": (float, 1e-8),
    "builder.delta_cap": (float, 0.1),
    "builder.k_retries": (int, 8),
    "builder.gate": (str, "class"),
    "tail.start": ((int, str), "auto"),
    "tail.window": (int, 5),
    "tail.tol": (float, 1e-8),
    "newton.max_iter": (int, 60),
    "newton.res_tol": (float, 1e-11),
    "newton.guard_samples": (int, 200),
    "seed": (int, 0),
    "output.path": (str, "report.json"),
}

ALIASES = {"p": "space.p", "dim": "space.dim", "n_points": "builder.n_points", "beta": "sequence.beta"}
SECTION_SHORTHAND = {"space": "space.kind", "sequence": "sequence.kind"}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values`` maps every dotted key to its value."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **dotted):
        v = dict(self.values)
        for k, val in dotted.items():
            v[k.replace("__", ".")] = val
        return validate(v)

    @property
    def tail_start(self) -> int:
        """``tail.start`` with ``auto`` resolved.

        ``auto`` is ``2 n_points + 8``, raised for perturbed sources until
        the perturbation ``beta^start`` sits two orders below ``tail.tol``.
        """
        s = self.values["tail.start"]
        if s != "auto":
            return int(s)
        start = 2 * self.values["builder.n_points"] + 8
        if self.values["sequence.kind"] == "perturbed-basis":
            beta, tol = self.values["sequence.beta"], self.values["tail.tol"]
            if 0 < beta < 1:
                start = max(start, math.ceil(math.log(tol / 100.0) / math.log(beta)))
        return start

    @property
    def min_dim(self) -> int:
        return 2 * self.values["builder.n_points"] + self.tail_start + self.values["tail.window"]

    def as_dict(self) -> dict:
        return {k: self.values[k] for k in SCHEMA}


def _key_lines(text):
    """Line numbers (1-based) of every mapping key in the document."""
    lines = {}
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines

    def walk(n, prefix):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                name = f"{prefix}{k.value}"
                lines[name] = k.start_mark.line + 1
                walk(v, name + ".")

    if node is not None:
        walk(node, "")
    return lines


def _flatten(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "."))
        else:
            out[name] = v
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        On malformed YAML (with line and column), unknown keys (with line),
        bad values, or a violated cross-field constraint.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"malformed config at {where}: {getattr(exc, 'problem', exc)}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping of keys to values")
    lines = _key_lines(text)
    flat = {}
    for k, v in _flatten(doc).items():
        key = ALIASES.get(SECTION_SHORTHAND.get(k, k), SECTION_SHORTHAND.get(k, k))
        if key not in SCHEMA:
            line = lines.get(k)
            raise ConfigError(f"unknown key {k!r}" + (f" at line {line}" if line else ""))
        if key in flat:
            raise ConfigError(f"key {key!r} given twice")
        flat[key] = v
    return validate(flat, lines)


def _coerce(key, v, lines):
    typ, _ = SCHEMA[key]
    where = f" (line {lines[key]})" if lines and key in lines else ""
    if key == "tail.start":
        if v == "auto":
            return v
        typ = int
    if isinstance(v, bool):
        raise ConfigError(f"{key}: expected {getattr(typ, '__name__', typ)}, got a boolean{where}")
    try:
        if typ is float:
            if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity", ".inf"):
                return math.inf
            return float(v)
        if typ is int:
            if isinstance(v, float) and not v.is_integer():
                raise ValueError
            return int(v)
        if typ is str:
            if not isinstance(v, str):
                raise ValueError
            return v
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot read {v!r} as {typ.__name__}{where}") from None
    return v


def validate(flat: dict, lines: dict | None = None) -> RunConfig:
    """Apply defaults, coerce types and check every constraint."""
    v = {}
    for key, (_, default) in SCHEMA.items():
        if key in flat:
            v[key] = _coerce(key, flat[key], lines)
        elif default is None:
            raise ConfigError(f"missing required key {key!r}")
        else:
            v[key] = default
    unknown = set(flat) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")

    if v["space.kind"] not in SPACE_KINDS:
        raise ConfigError(f"space.kind must be one of {SPACE_KINDS}, got {v['space.kind']!r}")
    p = v["space.p"]
    if p == 1.0 or math.isinf(p):
        raise ConfigError(f"space.p = {p} is not uniformly smooth")
    if not 1.01 <= p <= 100:
        raise ConfigError(f"space.p must lie in [1.01, 100], got {p}")
    if v["sequence.kind"] not in SEQUENCE_KINDS:
        raise ConfigError(f"sequence.kind must be one of {SEQUENCE_KINDS}, got {v['sequence.kind']!r}")
    if not 0 < v["sequence.beta"] < 1:
        raise ConfigError("sequence.beta must lie in (0, 1)")
    if v["builder.gate"] not in ("class", "measured"):
        raise ConfigError("builder.gate must be 'class' or 'measured'")
    for key in ("space.dim", "builder.n_points", "sequence.block", "newton.max_iter", "newton.guard_samples"):
        if v[key] < 1:
            raise ConfigError(f"{key} must be positive")
    if v["builder.k_retries"] < 0:
        raise ConfigError("builder.k_retries must be nonnegative")
    for key in ("builder.prop_tol", "builder.final_tol", "builder.delta_cap", "tail.tol", "newton.res_tol", "space.gradient_step"):
        if not v[key] > 0:
            raise ConfigError(f"{key} must be positive (all tolerances > 0)")
    if v["tail.window"] < 3:
        raise ConfigError("tail.window must be at least 3")
    if v["tail.start"] != "auto" and v["tail.start"] < 1:
        raise ConfigError("tail.start must be a positive index or 'auto'")

    cfg = RunConfig(v)
    need = cfg.min_dim
    if v["space.dim"] < need:
        raise ConfigError(
            f"space.dim = {v['space.dim']} is too small: need dim >= 2*n_points + tail.start + tail.window"
            f" = 2*{v['builder.n_points']} + {cfg.tail_start} + {v['tail.window']} = {need}"
        )
    if v["sequence.kind"] == "block":
        need_b = v["sequence.block"] * (cfg.tail_start + 2 * v["tail.window"])
        if v["space.dim"] < need_b:
            raise ConfigError(
                f"space.dim = {v['space.dim']} is too small for block sources: need block*(tail.start + 2*tail.window) = {need_b}"
            )
    return cfg


def serialize(cfg: RunConfig) -> str:
    """Flat dotted YAML that :func:`parse_config` reads back to an equal config."""
    return yaml.safe_dump(cfg.as_dict(), sort_keys=False, default_flow_style=False)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# factories


def make_oracle(cfg: RunConfig):
    from .norms import CustomNorm, LpNorm, lp_norm

    p, dim = cfg["space.p"], cfg["space.dim"]
    if cfg["space.kind"] == "lp":
        return LpNorm(p, dim)
    # custom-smooth runs the l_p norm through the generic finite-difference path
    return CustomNorm(lambda x: lp_norm(x, p), dim, gradient_step=cfg["space.gradient_step"], vectorized=True, name=f"l{p:g}-fd")


def make_source(cfg: RunConfig, oracle=None):
    from .sources import block_basis, perturbed_basis, unit_basis

    kind, dim = cfg["sequence.kind"], cfg["space.dim"]
    if kind == "unit-basis":
        return unit_basis(dim)
    if kind == "perturbed-basis":
        return perturbed_basis(dim, cfg["sequence.beta"])
    return block_basis(dim, cfg["sequence.block"], oracle=oracle)


def make_policy(cfg: RunConfig):
    from .tails import TailPolicy

    return TailPolicy(cfg.tail_start, cfg["tail.window"], cfg["tail.tol"])


def make_settings(cfg: RunConfig, seed: int | None = None):
    from .builder import BuildSettings

    return BuildSettings(
        n_points=cfg["builder.n_points"],
        prop_tol=cfg["builder.prop_tol"],
        final_tol=cfg["builder.final_tol"],
        delta_cap=cfg["builder.delta_cap"],
        k_retries=cfg["builder.k_retries"],
        gate=cfg["builder.gate"],
        max_iter=cfg["newton.max_iter"],
        res_tol=cfg["newton.res_tol"],
        guard_samples=cfg["newton.guard_samples"],
        seed=cfg["seed"] if seed is None else seed,
    )
