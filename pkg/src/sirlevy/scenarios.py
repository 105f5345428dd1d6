"""Scenario files: strict TOML schema, validation with aggregated errors, presets.

A scenario is a sectioned, human-editable file:

    [model]  a, mu1, mu2 (or alpha), beta, gamma
    [noise]  sigma1, sigma2
    [jump]   kind = "constant" | "discrete" | "density",
             mass + eta, marks = [[eta, weight], ...],
             or density_table = [[mark, density], ...]
    [sim]    t_end, dt, seed, positivity_floor, record_stride, blowup_ceiling
    [run]    name, init = [s, i, r], n_paths, outputs, pexp,
             extinction_cutoff, with_aux, trajectory_paths, histogram_bins

Unknown sections or keys are rejected; every violation is reported with its
key path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .jumps import JumpMeasure, chi2_margin
from .sde import SimConfig, State
from .thresholds import EpidemicParameters, NoiseSpec

OUTPUT_SELECTORS = ("trajectories", "histograms", "thresholds", "summary")

_SCHEMA = {
    "model": {"a", "mu1", "mu2", "alpha", "beta", "gamma"},
    "noise": {"sigma1", "sigma2"},
    "jump": {"kind", "mass", "eta", "marks", "density_table"},
    "sim": {"t_end", "dt", "seed", "positivity_floor", "record_stride", "blowup_ceiling"},
    "run": {
        "name",
        "init",
        "n_paths",
        "outputs",
        "pexp",
        "extinction_cutoff",
        "with_aux",
        "trajectory_paths",
        "histogram_bins",
    },
}


@dataclass(frozen=True)
class Scenario:
    name: str
    params: EpidemicParameters
    noise: NoiseSpec
    init: State
    sim: SimConfig
    n_paths: int
    outputs: tuple[str, ...]
    pexp: float = 1.0
    extinction_cutoff: float = 1e-4
    with_aux: bool = False
    trajectory_paths: int = 4
    histogram_bins: int = 60


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def number(self, section: dict, sec: str, key: str, default=None, required=False):
        if key not in section:
            if required:
                self.add(f"{sec}.{key}", "missing required key")
            return default
        v = section[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(f"{sec}.{key}", f"expected a number, got {v!r}")
            return default
        return float(v)

    def integer(self, section: dict, sec: str, key: str, default=None, required=False):
        if key not in section:
            if required:
                self.add(f"{sec}.{key}", "missing required key")
            return default
        v = section[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(f"{sec}.{key}", f"expected an integer, got {v!r}")
            return default
        return v


def _check_unknown(raw: dict, col: _Collector):
    for sec, content in raw.items():
        if sec not in _SCHEMA:
            col.add(sec, "unknown section")
            continue
        if not isinstance(content, dict):
            col.add(sec, "expected a table")
            continue
        for key in content:
            if key not in _SCHEMA[sec]:
                col.add(f"{sec}.{key}", "unknown key")


def _build_params(model: dict, col: _Collector) -> EpidemicParameters | None:
    a = col.number(model, "model", "a", required=True)
    mu1 = col.number(model, "model", "mu1", required=True)
    beta = col.number(model, "model", "beta", required=True)
    gamma = col.number(model, "model", "gamma", required=True)
    mu2 = col.number(model, "model", "mu2")
    alpha = col.number(model, "model", "alpha")
    if mu2 is None and alpha is None:
        col.add("model", "one of mu2 or alpha is required")
        return None
    if None in (a, mu1, beta, gamma):
        return None
    if alpha is None:
        if mu2 <= mu1:
            col.add("model.mu2", "mu2 must equal mu1 + alpha with alpha > 0")
            return None
        alpha = mu2 - mu1
    elif mu2 is not None and abs(mu2 - (mu1 + alpha)) > 1e-12 * max(1.0, abs(mu2)):
        col.add("model.mu2", "mu2 must equal mu1 + alpha")
        return None
    try:
        return EpidemicParameters(a=a, mu1=mu1, alpha=alpha, beta=beta, gamma=gamma)
    except ValueError as exc:
        col.add("model", str(exc))
        return None


def _build_jump(jump: dict, col: _Collector) -> JumpMeasure | None:
    kind = jump.get("kind")
    if kind not in ("constant", "discrete", "density"):
        col.add("jump.kind", f"must be one of constant|discrete|density, got {kind!r}")
        return None
    try:
        if kind == "constant":
            eta = col.number(jump, "jump", "eta", required=True)
            mass = col.number(jump, "jump", "mass", default=1.0)
            if eta is None or mass is None:
                return None
            if eta <= -1.0:
                col.add("jump.eta", "jump mark violates 1+eta>0")
                return None
            return JumpMeasure.constant(eta, mass)
        if kind == "discrete":
            pairs = jump.get("marks")
            if not isinstance(pairs, list) or not all(
                isinstance(p, list) and len(p) == 2 for p in pairs
            ):
                col.add("jump.marks", "expected a list of [eta, weight] pairs")
                return None
            return JumpMeasure.discrete([(float(e), float(w)) for e, w in pairs])
        table = jump.get("density_table")
        if not isinstance(table, list) or not all(isinstance(p, list) and len(p) == 2 for p in table):
            col.add("jump.density_table", "expected a list of [mark, density] rows")
            return None
        nodes = [float(row[0]) for row in table]
        values = [float(row[1]) for row in table]
        return JumpMeasure.from_density(nodes, values)
    except Exception as exc:
        col.add("jump", str(exc))
        return None


def validate_config(source) -> Scenario:
    """Parse and fully validate a scenario; raises ConfigError listing every
    violation with its key path.  ``source`` is a file path or a parsed dict."""
    if isinstance(source, dict):
        raw = source
        default_name = "scenario"
    else:
        path = Path(source)
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError([f"{path}: no such file"])
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: {exc}"])
        default_name = path.stem

    col = _Collector()
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected tables"])
    _check_unknown(raw, col)
    model = raw.get("model", {})
    noise_sec = raw.get("noise", {})
    jump_sec = raw.get("jump", {})
    sim_sec = raw.get("sim", {})
    run_sec = raw.get("run", {})
    for sec, name in ((model, "model"), (jump_sec, "jump"), (sim_sec, "sim")):
        if not sec:
            col.add(name, "missing required section")
    if col.errors and not all(isinstance(s, dict) for s in (model, noise_sec, jump_sec, sim_sec, run_sec)):
        raise ConfigError(col.errors)

    params = _build_params(model, col) if model else None
    jump = _build_jump(jump_sec, col) if jump_sec else None

    sigma1 = col.number(noise_sec, "noise", "sigma1", default=0.0)
    sigma2 = col.number(noise_sec, "noise", "sigma2", default=0.0)
    noise = None
    if jump is not None and sigma1 is not None and sigma2 is not None:
        try:
            noise = NoiseSpec(sigma1=sigma1, sigma2=sigma2, jump=jump)
        except ValueError as exc:
            col.add("noise", str(exc))

    t_end = col.number(sim_sec, "sim", "t_end", required=True)
    dt = col.number(sim_sec, "sim", "dt", default=1e-2)
    seed = col.integer(sim_sec, "sim", "seed", default=0)
    floor = col.number(sim_sec, "sim", "positivity_floor", default=1e-12)
    stride = col.integer(sim_sec, "sim", "record_stride", default=0)
    ceiling = col.number(sim_sec, "sim", "blowup_ceiling", default=1e9)
    sim = None
    if t_end is not None and dt is not None:
        try:
            sim = SimConfig(
                t_end=t_end,
                dt=dt,
                seed=seed,
                positivity_floor=floor,
                record_stride=None if not stride else stride,
                blowup_ceiling=ceiling,
            )
        except ValueError as exc:
            col.add("sim", str(exc))

    init_raw = run_sec.get("init")
    init = None
    if init_raw is None:
        col.add("run.init", "missing required key")
    elif not (isinstance(init_raw, list) and len(init_raw) == 3):
        col.add("run.init", "expected [s, i, r]")
    else:
        try:
            init = State(*[float(v) for v in init_raw])
            if not (init.s > 0 and init.i > 0 and init.r > 0):
                col.add("run.init", "initial compartments must be strictly positive")
        except (TypeError, ValueError) as exc:
            col.add("run.init", str(exc))

    n_paths = col.integer(run_sec, "run", "n_paths", default=1)
    if n_paths is not None and n_paths < 1:
        col.add("run.n_paths", "must be >= 1")
    outputs = run_sec.get("outputs", ["thresholds", "summary"])
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        col.add("run.outputs", "expected a list of selector strings")
        outputs = []
    else:
        for o in outputs:
            if o not in OUTPUT_SELECTORS:
                col.add("run.outputs", f"unknown selector {o!r}")
        if "histograms" in outputs and n_paths is not None and n_paths < 100:
            col.add("run.outputs", "histograms need n_paths >= 100 final states")
    pexp = col.number(run_sec, "run", "pexp", default=1.0)
    cutoff = col.number(run_sec, "run", "extinction_cutoff", default=1e-4)
    with_aux = run_sec.get("with_aux", False)
    if not isinstance(with_aux, bool):
        col.add("run.with_aux", "expected a boolean")
        with_aux = False
    traj_paths = col.integer(run_sec, "run", "trajectory_paths", default=4)
    hist_bins = col.integer(run_sec, "run", "histogram_bins", default=60)
    name = run_sec.get("name", default_name)
    if not isinstance(name, str) or not name:
        col.add("run.name", "expected a non-empty string")

    if pexp is not None and pexp < 0.5:
        col.add("run.pexp", "moment exponent must be >= 1/2")
    if params is not None and noise is not None and pexp is not None and pexp >= 0.5:
        if chi2_margin(noise.jump, noise.sigma1, params.mu1, pexp) <= 0.0:
            col.add("run.pexp", f"chi2({pexp:g}) <= 0: moment assumption fails at this exponent")

    if col.errors:
        raise ConfigError(sorted(col.errors))
    return Scenario(
        name=name,
        params=params,
        noise=noise,
        init=init,
        sim=sim,
        n_paths=n_paths,
        outputs=tuple(outputs),
        pexp=pexp,
        extinction_cutoff=cutoff,
        with_aux=with_aux,
        trajectory_paths=traj_paths,
        histogram_bins=hist_bins,
    )


def scenario_to_dict(sc: Scenario) -> dict:
    """Normalized echo of a scenario: defaults filled, derived keys explicit."""
    jump = sc.noise.jump
    jump_sec: dict = {"kind": jump.kind.value}
    if jump.kind.value == "constant":
        jump_sec["eta"] = float(jump.marks[0])
        jump_sec["mass"] = jump.total_mass
    elif jump.kind.value == "discrete":
        jump_sec["marks"] = [[float(m), float(w)] for m, w in zip(jump.marks, jump.weights)]
    else:
        jump_sec["density_table"] = [[float(m), float(d)] for m, d in zip(jump.marks, jump.density)]
    return {
        "model": {
            "a": sc.params.a,
            "mu1": sc.params.mu1,
            "alpha": sc.params.alpha,
            "mu2": sc.params.mu2,
            "beta": sc.params.beta,
            "gamma": sc.params.gamma,
        },
        "noise": {"sigma1": sc.noise.sigma1, "sigma2": sc.noise.sigma2},
        "jump": jump_sec,
        "sim": {
            "t_end": sc.sim.t_end,
            "dt": sc.sim.dt,
            "seed": sc.sim.seed,
            "positivity_floor": sc.sim.positivity_floor,
            "record_stride": 0 if sc.sim.record_stride is None else sc.sim.record_stride,
            "blowup_ceiling": sc.sim.blowup_ceiling,
        },
        "run": {
            "name": sc.name,
            "init": [sc.init.s, sc.init.i, sc.init.r],
            "n_paths": sc.n_paths,
            "outputs": list(sc.outputs),
            "pexp": sc.pexp,
            "extinction_cutoff": sc.extinction_cutoff,
            "with_aux": sc.with_aux,
            "trajectory_paths": sc.trajectory_paths,
            "histogram_bins": sc.histogram_bins,
        },
    }


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def dump_toml(d: dict) -> str:
    """Serialize the normalized scenario dict back to TOML text."""
    lines = []
    for sec, content in d.items():
        lines.append(f"[{sec}]")
        for key, val in content.items():
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    return "\n".join(lines)


def preset_names() -> list[str]:
    root = resources.files("sirlevy").joinpath("presets")
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_path(name: str) -> Path:
    p = resources.files("sirlevy").joinpath("presets", f"{name}.toml")
    if not p.is_file():
        raise ConfigError([f"unknown preset {name!r}; available: {', '.join(preset_names())}"])
    return Path(str(p))


def load_preset(name: str) -> Scenario:
    return validate_config(preset_path(name))
