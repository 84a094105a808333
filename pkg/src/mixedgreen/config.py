"""Run configuration: flat ``key = value`` files with one-level dotted keys.

Recognized keys
---------------
domain            path of the domain file (relative to the config file)
coeff.kind        scalar_laplace | constant_tensor | lame
coeff.m           number of components (constant_tensor)
coeff.mu          Lamé mu (number or expression in y1, y2)
coeff.lambda      Lamé lambda
coeff.tensor      [a, b, ...] flat list of 4 m^2 entries, row-major in (i, j, alpha, beta)
data.f            volume data: expression, or [expr, expr] for systems
data.fN           Neumann data, same syntax
h, rho, R         mesh size, Green averaging radius, free-space radius
poles             x,y; x,y; ...
points            evaluation points, same syntax
bc                mixed | dirichlet | neumann
checks            comma separated check names
seed, levels      integers
"""

import hashlib
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .expressions import Expression

KEYS = {
    "domain", "coeff.kind", "coeff.m", "coeff.mu", "coeff.lambda", "coeff.tensor", "data.f", "data.fN",
    "h", "rho", "R", "poles", "points", "bc", "checks", "seed", "levels", "out",
}


def parse_config(text):
    """Parse config text into an ordered dict of raw string values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.count(".") > 1 or not key:
            raise ConfigError(f"config: line {lineno}: bad key {key!r}")
        if key not in KEYS:
            raise ConfigError(f"config: line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"config: line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def split_top(text, sep=","):
    """Split on ``sep`` outside parentheses and brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


def parse_points(text):
    """``"x,y; x,y"`` -> list of (x, y)."""
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        xy = chunk.split(",")
        try:
            if len(xy) != 2:
                raise ValueError
            pts.append((float(xy[0]), float(xy[1])))
        except ValueError:
            raise ConfigError(f"config: bad point {chunk!r}") from None
    return pts


def parse_list(text):
    s = text.strip()
    if s.startswith("[") and s.endswith("]"):
        s = s[1:-1]
    return split_top(s)


class VectorExpression:
    """Component expressions evaluated together, shape (P, m)."""

    def __init__(self, texts):
        self.parts = [Expression(t) for t in texts]

    def __call__(self, points):
        import numpy as np

        return np.column_stack([p(points) for p in self.parts])


def parse_data(text):
    """Scalar expression or ``[e1, e2, ...]`` list of component expressions."""
    if text is None:
        return None
    s = text.strip()
    if s.startswith("["):
        return VectorExpression(parse_list(s))
    return Expression(s)


def _num(raw, key, kind=float):
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config: {key} must be {'an integer' if kind is int else 'a number'}") from None


@dataclass
class RunConfig:
    """Effective settings of one run (config file merged with command-line flags)."""

    domain: str = None
    coeff: dict = field(default_factory=lambda: {"kind": "scalar_laplace"})
    f: str = None
    fN: str = None
    h: float = 0.05
    rho: float = None
    R: float = None
    poles: list = field(default_factory=list)
    points: list = field(default_factory=list)
    bc: str = None
    checks: list = field(default_factory=list)
    out: str = "."
    seed: int = 0
    levels: int = 3
    source: str = ""

    def canonical(self):
        """Deterministic text form used for the config hash."""
        items = [("domain", os.path.basename(self.domain) if self.domain else ""),
                 *sorted(("coeff." + k, str(v)) for k, v in self.coeff.items()),
                 ("f", self.f or ""), ("fN", self.fN or ""), ("h", repr(self.h)), ("rho", repr(self.rho)),
                 ("R", repr(self.R)), ("poles", repr(self.poles)), ("points", repr(self.points)),
                 ("bc", str(self.bc)), ("checks", ",".join(self.checks)), ("seed", str(self.seed)),
                 ("levels", str(self.levels))]
        text = "\n".join(f"{k}={v}" for k, v in items)
        if self.domain and os.path.isfile(self.domain):
            with open(self.domain) as fh:
                text += "\n" + fh.read()
        return text

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def coefficients(self, dom=None):
        from .operators import make_coefficients

        c = dict(self.coeff)
        kind = c.pop("kind", "scalar_laplace")
        params = {}
        if "tensor" in c:
            params["tensor"] = [_num(v, "coeff.tensor") for v in parse_list(c["tensor"])]
        if "m" in c:
            params["m"] = _num(c["m"], "coeff.m", int)
        for k in ("mu", "lambda"):
            if k in c:
                try:
                    params[k] = float(c[k])
                except ValueError:
                    params[k] = c[k]
        return make_coefficients(kind, params, dom=dom)

    def data(self):
        return parse_data(self.f), parse_data(self.fN)


def load_config(path):
    if not os.path.isfile(path):
        raise ConfigError("config: config file not found")
    with open(path) as fh:
        raw = parse_config(fh.read())
    return raw, os.path.dirname(os.path.abspath(path))


def build_config(raw, base_dir="."):
    """RunConfig from parsed key/value pairs; numbers validated, files not yet touched."""
    cfg = RunConfig()
    if "domain" in raw:
        cfg.domain = os.path.join(base_dir, raw["domain"])
    coeff = {k.split(".", 1)[1]: v for k, v in raw.items() if k.startswith("coeff.")}
    if coeff:
        coeff.setdefault("kind", "scalar_laplace")
        cfg.coeff = coeff
    cfg.f, cfg.fN = raw.get("data.f"), raw.get("data.fN")
    for key in ("h", "rho", "R"):
        if key in raw:
            setattr(cfg, key, _num(raw[key], key))
    for key in ("seed", "levels"):
        if key in raw:
            setattr(cfg, key, _num(raw[key], key, int))
    if "poles" in raw:
        cfg.poles = parse_points(raw["poles"])
    if "points" in raw:
        cfg.points = parse_points(raw["points"])
    if "bc" in raw:
        cfg.bc = raw["bc"]
    if "checks" in raw:
        cfg.checks = split_top(raw["checks"])
    if "out" in raw:
        cfg.out = os.path.join(base_dir, raw["out"])
    return cfg


def validate_numbers(cfg):
    """Range checks that need no files: 0 < h, rho >= 4h, levels >= 3."""
    import math

    if not (math.isfinite(cfg.h) and cfg.h > 0):
        raise ConfigError("config: h must be positive")
    if cfg.rho is not None:
        if not (math.isfinite(cfg.rho) and cfg.rho > 0):
            raise ConfigError("config: rho must be positive")
        if cfg.rho < 4.0 * cfg.h * (1 - 1e-12):
            raise ConfigError("rho under-resolved (rho < 4h)")
    if cfg.R is not None and not cfg.R > 0:
        raise ConfigError("config: R must be positive")
    if cfg.levels < 3:
        raise ConfigError("config: levels must be >= 3")
    if cfg.bc not in (None, "mixed", "dirichlet", "neumann"):
        raise ConfigError(f"config: unknown bc {cfg.bc!r}")
