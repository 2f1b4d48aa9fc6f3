"""Run configuration: sectioned key=value files.

Format: `[section]` headers, one `key = value` pair per line, `#` starts a
comment.  Parsing is total: every problem in the file is collected (with its
line number) and reported at once, rather than stopping at the first error.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .fields import GridSpec
from .models import FreeModel, HartreeKernel, Model, PowerLaw
from .weights import AbsX, Directional, Projection, WeightSpec


class ConfigError(ValueError):
    """Aggregated configuration errors, each tagged with a line number."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = sorted(errors)
        lines = "; ".join(f"line {ln}: {msg}" if ln > 0 else msg
                          for ln, msg in self.errors)
        super().__init__(lines)


@dataclass
class InitialSpec:
    kind: str                       # gaussian | soliton | random
    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, ...] = ()
    velocity: tuple[float, ...] = ()
    seed: int = 0
    modes: int = 4


@dataclass
class DiagnosticsSpec:
    weight: str = "absx"            # absx | directional | projection
    theta: tuple[float, ...] = ()
    axes: tuple[int, ...] = ()      # projection onto the span of these axes
    morawetz: bool = True
    scatter: bool = False
    strichartz: bool = False
    scatter_threshold: float = 1e-3
    identity_tolerance: float = 1e-3

    def weight_spec(self, n: int) -> WeightSpec:
        if self.weight == "absx":
            return AbsX()
        if self.weight == "directional":
            theta = self.theta or tuple([1.0] + [0.0] * (n - 1))
            return Directional(theta)
        axes = self.axes or tuple(range(n))
        P = np.zeros((n, n))
        for a in axes:
            P[a, a] = 1.0
        return Projection(tuple(tuple(row) for row in P))


@dataclass
class RunConfig:
    grid: GridSpec
    model: Model
    t0: float
    t1: float
    dt: float
    record_stride: int
    blowup_threshold: float
    initial: InitialSpec
    diagnostics: DiagnosticsSpec
    source_text: str = ""
    seed_override: int | None = None

    @property
    def seed(self) -> int:
        if self.seed_override is not None:
            return self.seed_override
        return self.initial.seed

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()


def _tokenize(text: str):
    """Yield (line_number, section, key, value) plus a raw diagnostics list."""
    errors = []
    entries = []        # (line, section, key, value)
    section = None
    section_lines: dict[str, int] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append((ln, f"malformed section header {raw.strip()!r}"))
                continue
            section = line[1:-1].strip().lower()
            if section in section_lines:
                errors.append((ln, f"duplicate section [{section}] "
                                   f"(first at line {section_lines[section]})"))
            else:
                section_lines[section] = ln
            continue
        if "=" not in line:
            errors.append((ln, f"expected key = value, got {raw.strip()!r}"))
            continue
        if section is None:
            errors.append((ln, "key outside any [section]"))
            continue
        key, value = line.split("=", 1)
        entries.append((ln, section, key.strip(), value.strip()))
    return entries, section_lines, errors


_KNOWN_KEYS = {
    "grid": {"n", "N", "L"},
    "model": {"kind", "terms", "family", "a", "gamma", "eps", "coupling"},
    "run": {"t0", "t1", "dt", "record_stride", "blowup_threshold"},
    "initial": {"kind", "amplitude", "width", "center", "velocity",
                "seed", "modes"},
    "diagnostics": {"weight", "theta", "axes", "morawetz", "scatter",
                    "strichartz", "scatter_threshold", "identity_tolerance"},
}
_REQUIRED_SECTIONS = ("grid", "model", "run", "initial")


class _Section:
    """Typed accessors over one section's key/value pairs, error-collecting."""

    def __init__(self, name, pairs, errors):
        self.name = name
        self.pairs = pairs      # key -> (line, value)
        self.errors = errors

    def _raw(self, key, default=None, required=False):
        if key in self.pairs:
            return self.pairs[key]
        if required:
            self.errors.append((0, f"[{self.name}] missing required key {key!r}"))
        return None if default is None else (0, default)

    def _convert(self, key, conv, typename, default=None, required=False):
        got = self._raw(key, default=default, required=required)
        if got is None:
            return None
        ln, value = got
        if not isinstance(value, str):
            return value
        try:
            return conv(value)
        except (ValueError, TypeError):
            self.errors.append(
                (ln, f"[{self.name}] {key} = {value!r} is not a valid {typename}"))
            return None

    def floatv(self, key, default=None, required=False):
        return self._convert(key, float, "number", default, required)

    def intv(self, key, default=None, required=False):
        return self._convert(key, int, "integer", default, required)

    def strv(self, key, default=None, required=False):
        got = self._raw(key, default=default, required=required)
        return None if got is None else got[1]

    def boolv(self, key, default=False):
        def conv(s):
            low = s.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(s)
        return self._convert(key, conv, "boolean", default)

    def floats(self, key, default=()):
        def conv(s):
            return tuple(float(v) for v in s.split(",") if v.strip())
        return self._convert(key, conv, "comma list of numbers", default)

    def ints(self, key, default=()):
        def conv(s):
            return tuple(int(v) for v in s.split(",") if v.strip())
        return self._convert(key, conv, "comma list of integers", default)


def parse_config(text: str) -> RunConfig:
    entries, section_lines, errors = _tokenize(text)

    by_section: dict[str, dict] = {}
    key_lines: dict[tuple[str, str], int] = {}
    for ln, section, key, value in entries:
        if section not in _KNOWN_KEYS:
            errors.append((ln, f"unknown section [{section}]"))
            continue
        if key not in _KNOWN_KEYS[section]:
            errors.append((ln, f"unknown key {key!r} in [{section}]"))
            continue
        prev = key_lines.get((section, key))
        if prev is not None:
            errors.append(
                (ln, f"duplicate key {key!r} in [{section}] "
                     f"(lines {prev} and {ln})"))
            continue
        key_lines[(section, key)] = ln
        by_section.setdefault(section, {})[key] = (ln, value)

    for name in _REQUIRED_SECTIONS:
        if name not in section_lines:
            errors.append((0, f"missing required section [{name}]"))

    def sec(name):
        return _Section(name, by_section.get(name, {}), errors)

    # grid ----------------------------------------------------------------
    g = sec("grid")
    n = g.intv("n", required=True)
    N = g.intv("N", required=True)
    L = g.floatv("L", required=True)
    grid = None
    if None not in (n, N, L):
        try:
            grid = GridSpec(n=n, N=N, L=L)
        except ValueError as exc:
            errors.append((section_lines.get("grid", 0), f"[grid] {exc}"))

    # model ---------------------------------------------------------------
    m = sec("model")
    kind = (m.strv("kind", required=True) or "").lower()
    model: Model | None = None
    if kind == "free":
        model = FreeModel()
    elif kind == "power":
        raw = m.strv("terms", required=True)
        if raw is not None:
            terms = []
            ok = True
            for part in raw.split(","):
                part = part.strip()
                if not part:
                    continue
                bits = part.split(":")
                try:
                    lam, p = float(bits[0]), float(bits[1])
                    terms.append((lam, p))
                except (IndexError, ValueError):
                    errors.append((key_lines.get(("model", "terms"), 0),
                                   f"[model] bad power term {part!r}; "
                                   "expected coupling:exponent"))
                    ok = False
            if ok:
                try:
                    model = PowerLaw(tuple(terms))
                except ValueError as exc:
                    errors.append((key_lines.get(("model", "terms"), 0),
                                   f"[model] {exc}"))
    elif kind == "hartree":
        family = (m.strv("family", "gaussian") or "gaussian").lower()
        try:
            model = HartreeKernel(
                family=family,
                a=m.floatv("a", 1.0), gamma=m.floatv("gamma", 1.0),
                eps=m.floatv("eps", 0.1), coupling=m.floatv("coupling", 1.0))
        except (ValueError, TypeError) as exc:
            errors.append((section_lines.get("model", 0), f"[model] {exc}"))
    elif kind:
        errors.append((key_lines.get(("model", "kind"), 0),
                       f"[model] unknown kind {kind!r}"))

    # run -----------------------------------------------------------------
    r = sec("run")
    t0 = r.floatv("t0", 0.0)
    t1 = r.floatv("t1", required=True)
    dt = r.floatv("dt", required=True)
    stride = r.intv("record_stride", 1)
    blowup = r.floatv("blowup_threshold", 1e6)
    if dt is not None and dt <= 0:
        errors.append((key_lines.get(("run", "dt"), 0), "[run] dt must be positive"))
    if None not in (t0, t1) and t1 <= t0:
        errors.append((key_lines.get(("run", "t1"), 0), "[run] need t1 > t0"))
    if stride is not None and stride < 1:
        errors.append((key_lines.get(("run", "record_stride"), 0),
                       "[run] record_stride must be >= 1"))

    # initial -------------------------------------------------------------
    i = sec("initial")
    ikind = (i.strv("kind", required=True) or "").lower()
    if ikind and ikind not in ("gaussian", "soliton", "random"):
        errors.append((key_lines.get(("initial", "kind"), 0),
                       f"[initial] unknown kind {ikind!r}"))
    initial = InitialSpec(
        kind=ikind,
        amplitude=i.floatv("amplitude", 1.0) or 1.0,
        width=i.floatv("width", 1.0) or 1.0,
        center=i.floats("center", ()) or (),
        velocity=i.floats("velocity", ()) or (),
        seed=i.intv("seed", 0) or 0,
        modes=i.intv("modes", 4) or 4,
    )
    if initial.kind == "gaussian" and initial.width <= 0:
        errors.append((key_lines.get(("initial", "width"), 0),
                       "[initial] width must be positive"))
    if initial.kind == "soliton" and grid is not None and grid.n != 1:
        errors.append((key_lines.get(("initial", "kind"), 0),
                       "[initial] soliton initial data requires n = 1"))

    # diagnostics ---------------------------------------------------------
    d = sec("diagnostics")
    weight = (d.strv("weight", "absx") or "absx").lower()
    if weight not in ("absx", "directional", "projection"):
        errors.append((key_lines.get(("diagnostics", "weight"), 0),
                       f"[diagnostics] unknown weight {weight!r}"))
        weight = "absx"
    diagnostics = DiagnosticsSpec(
        weight=weight,
        theta=d.floats("theta", ()) or (),
        axes=d.ints("axes", ()) or (),
        morawetz=d.boolv("morawetz", True),
        scatter=d.boolv("scatter", False),
        strichartz=d.boolv("strichartz", False),
        scatter_threshold=d.floatv("scatter_threshold", 1e-3) or 1e-3,
        identity_tolerance=d.floatv("identity_tolerance", 1e-3) or 1e-3,
    )

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        grid=grid, model=model, t0=t0, t1=t1, dt=dt,
        record_stride=stride, blowup_threshold=blowup,
        initial=initial, diagnostics=diagnostics, source_text=text)


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
