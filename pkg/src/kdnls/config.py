"""Run configuration: YAML in, validated dataclasses out.

Unknown keys anywhere are errors, reported with their dotted path.  The
canonical JSON form of the validated config is hashed to give the run id.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import yaml

from .dynamics import EquationParams, RhsKind
from .errors import ConfigInvalid
from .integrators import SolverConfig
from .presets import PRESETS
from .spectral import GridSpec

_REQUIRED = object()


@dataclass(frozen=True)
class EquationSection:
    alpha: float = 0.0
    beta: float = 0.0
    epsilon: float = 0.0
    kind: str = "renormalized"
    drift: bool = False


@dataclass(frozen=True)
class InitialSection:
    preset: str | None = "two-mode"
    params: dict = field(default_factory=dict)
    spectrum: str | None = None


@dataclass(frozen=True)
class OutputSection:
    snapshots: int = 11
    identities: bool = True


@dataclass(frozen=True)
class BonaSmithSection:
    lam: float = 0.4
    eps_list: tuple = (1e-1, 3e-2, 1e-2, 3e-3)
    s: float = 2.0


@dataclass(frozen=True)
class GaugeSection:
    every: int = 10
    signs: tuple = (1, -1)
    h: float | None = None


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    equation: EquationSection
    solver: SolverConfig
    initial: InitialSection
    output: OutputSection = OutputSection()
    seed: int = 0
    name: str = ""
    sweep: dict = field(default_factory=dict)
    bona_smith: BonaSmithSection = BonaSmithSection()
    gauge: GaugeSection = GaugeSection()
    source: str = ""

    def canonical(self) -> dict:
        d = {
            "name": self.name,
            "seed": self.seed,
            "grid": {"N": self.grid.N},
            "equation": asdict(self.equation),
            "solver": asdict(self.solver),
            "initial": asdict(self.initial),
            "output": asdict(self.output),
            "sweep": self.sweep,
            "bona_smith": asdict(self.bona_smith),
            "gauge": asdict(self.gauge),
        }
        return json.loads(json.dumps(d, sort_keys=True, default=list))

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")).encode()

    @property
    def run_id(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()[:16]

    def params_for(self, phi) -> EquationParams:
        e = self.equation
        return EquationParams.for_datum(phi, e.alpha, e.beta, e.epsilon, drift=e.drift)

    @property
    def kind(self) -> RhsKind:
        return RhsKind(self.equation.kind)

    def with_overrides(self, **kw) -> "RunConfig":
        """Copy with sweep-style overrides (alpha, beta, N, dt, preset, seed)."""
        eq, sol, grid, ini, seed = self.equation, self.solver, self.grid, self.initial, self.seed
        if "alpha" in kw or "beta" in kw:
            eq = EquationSection(**{**asdict(eq), **{k: float(kw[k]) for k in ("alpha", "beta") if k in kw}})
        if "dt" in kw:
            sol = SolverConfig(**{**asdict(sol), "dt": float(kw["dt"])})
        if "N" in kw:
            grid = GridSpec(int(kw["N"]))
        if "preset" in kw:
            ini = InitialSection(preset=kw["preset"], params={}, spectrum=None)
        if "seed" in kw:
            seed = int(kw["seed"])
        return RunConfig(grid=grid, equation=eq, solver=sol, initial=ini, output=self.output,
                         seed=seed, name=self.name, sweep={}, bona_smith=self.bona_smith,
                         gauge=self.gauge, source=self.source)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

def _take(raw, path: str, schema: dict) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigInvalid(path, "expected a mapping")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else str(unknown[0])
        raise ConfigInvalid(where, "unknown key")
    out = {}
    for key, (conv, default) in schema.items():
        where = f"{path}.{key}" if path else key
        if key not in raw or raw[key] is None:
            if default is _REQUIRED:
                raise ConfigInvalid(where, "missing required key")
            out[key] = default
            continue
        try:
            out[key] = conv(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(where, f"invalid value {raw[key]!r}: {exc}") from None
    return out


def _bool(x):
    if isinstance(x, bool):
        return x
    raise TypeError("expected true or false")


def _int(x):
    if isinstance(x, bool) or int(x) != x:
        raise TypeError("expected an integer")
    return int(x)


def _float_list(x):
    if not isinstance(x, (list, tuple)):
        raise TypeError("expected a list")
    return tuple(float(v) for v in x)


def _params(x):
    if not isinstance(x, dict):
        raise TypeError("expected a mapping")
    return dict(x)


def _opt_float(x):
    return None if x is None else float(x)


SWEEP_AXES = {"alpha": float, "beta": float, "N": _int, "dt": float, "preset": str, "seed": _int}


def parse_config(raw: dict, source: str = "") -> RunConfig:
    top = _take(raw, "", {
        "name": (str, ""), "seed": (_int, 0), "grid": (dict, _REQUIRED), "equation": (dict, {}),
        "solver": (dict, _REQUIRED), "initial": (dict, {}), "output": (dict, {}),
        "sweep": (dict, {}), "bona_smith": (dict, {}), "gauge": (dict, {}),
    })
    g = _take(top["grid"], "grid", {"N": (_int, _REQUIRED)})
    try:
        grid = GridSpec(g["N"])
    except ValueError as exc:
        raise ConfigInvalid("grid.N", str(exc)) from None

    e = _take(top["equation"], "equation", {
        "alpha": (float, 0.0), "beta": (float, 0.0), "epsilon": (float, 0.0),
        "kind": (str, "renormalized"), "drift": (_bool, False)})
    if e["kind"] not in {k.value for k in RhsKind}:
        raise ConfigInvalid("equation.kind", f"must be one of {[k.value for k in RhsKind]}")
    if e["beta"] > 0:
        raise ConfigInvalid("equation.beta", "must be <= 0")
    if e["epsilon"] < 0:
        raise ConfigInvalid("equation.epsilon", "must be >= 0")
    if e["kind"] == "regularized" and e["epsilon"] <= 0:
        raise ConfigInvalid("equation.epsilon", "regularized runs need epsilon > 0")
    equation = EquationSection(**e)

    s = _take(top["solver"], "solver", {
        "dt": (float, _REQUIRED), "t_final": (float, _REQUIRED), "scheme": (str, "lawson_rk4"),
        "snapshot_stride": (_int, 1), "residual_stencil_h": (_opt_float, None), "norm_s": (float, 2.0)})
    try:
        solver = SolverConfig(**s)
    except ValueError as exc:
        raise ConfigInvalid("solver", str(exc)) from None

    i = _take(top["initial"], "initial", {
        "preset": (str, None), "params": (_params, {}), "spectrum": (str, None)})
    if (i["preset"] is None) == (i["spectrum"] is None):
        if i["preset"] is None and i["spectrum"] is None:
            i["preset"] = "two-mode"
        else:
            raise ConfigInvalid("initial", "give exactly one of preset or spectrum")
    if i["preset"] is not None and i["preset"] not in PRESETS:
        raise ConfigInvalid("initial.preset", f"unknown preset; choose from {sorted(PRESETS)}")
    initial = InitialSection(**i)

    o = _take(top["output"], "output", {"snapshots": (_int, 11), "identities": (_bool, True)})
    if o["snapshots"] < 1:
        raise ConfigInvalid("output.snapshots", "must be >= 1")
    output = OutputSection(**o)

    sweep = {}
    for key, values in top["sweep"].items():
        if key not in SWEEP_AXES:
            raise ConfigInvalid(f"sweep.{key}", "unknown sweep axis")
        if not isinstance(values, list) or not values:
            raise ConfigInvalid(f"sweep.{key}", "expected a non-empty list")
        try:
            sweep[key] = [SWEEP_AXES[key](v) for v in values]
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"sweep.{key}", str(exc)) from None

    b = _take(top["bona_smith"], "bona_smith", {
        "lambda": (float, 0.4), "eps_list": (_float_list, (1e-1, 3e-2, 1e-2, 3e-3)), "s": (float, 2.0)})
    if not 0 < b["lambda"] < 0.5:
        raise ConfigInvalid("bona_smith.lambda", "must lie in (0, 1/2)")
    eps = b["eps_list"]
    if len(eps) < 2 or any(x <= y for x, y in zip(eps, eps[1:])) or not all(0 < x < 1 for x in eps):
        raise ConfigInvalid("bona_smith.eps_list", "need >= 2 strictly decreasing values in (0, 1)")
    bona = BonaSmithSection(lam=b["lambda"], eps_list=eps, s=b["s"])

    gg = _take(top["gauge"], "gauge", {"every": (_int, 10), "signs": (list, [1, -1]),
                                        "h": (_opt_float, None)})
    if any(x not in (1, -1) for x in gg["signs"]):
        raise ConfigInvalid("gauge.signs", "entries must be 1 or -1")
    gauge = GaugeSection(every=max(1, gg["every"]), signs=tuple(gg["signs"]), h=gg["h"])

    return RunConfig(grid=grid, equation=equation, solver=solver, initial=initial, output=output,
                     seed=top["seed"], name=top["name"], sweep=sweep, bona_smith=bona,
                     gauge=gauge, source=source)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigInvalid("", f"cannot read {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigInvalid("", f"malformed YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigInvalid("", "top level must be a mapping")
    return parse_config(raw, source=str(path))
