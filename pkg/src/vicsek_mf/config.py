"""Flat ``key = value`` run configuration with typed, aggregated validation."""

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError
from .kernels import InteractionKernel, KernelVariant
from .sde_stepper import DT_CAP, StepParams, StepScheme

EXPERIMENTS = ("simulate", "couple", "homogeneous", "analyze", "sweep")
ORIENTATION_LAWS = ("uniform", "vmf")
INITIAL_DENSITIES = ("perturbed_uniform", "von_mises")
SWEEPABLE = ("simulate", "couple", "homogeneous")
# execution-only keys: they never change results, so they stay out of the digest
_UNHASHED = ("workers", "input")


def _floats(s):
    return tuple(float(t) for t in s.replace(",", " ").split())


def _ints(s):
    return tuple(int(t) for t in s.replace(",", " ").split())


def _words(s):
    return tuple(t for t in s.replace(",", " ").split())


def _int(s):
    return int(s, 0)


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "simulate"
    d: int = 2
    N: int = 64
    M_multiplier: int = 8
    kernel: str = "constant"
    kappa: float = 1.0
    length_scale: float = 1.0
    scheme: str = "stratonovich_project"
    dt: float = 1e-3
    T: float = 1.0
    seed: int = 1
    position_mean: tuple = (0.0,)
    position_sd: float = 1.0
    orientation_law: str = "uniform"
    vmf_mu: tuple = ()
    vmf_kappa: float = 0.0
    record_every: int = 100
    # couple
    N_values: tuple = (16, 32, 64, 128, 256)
    replicas: int = 64
    # homogeneous
    K_max: int = 64
    spectral_dt: float = 1e-2
    initial_density: str = "perturbed_uniform"
    initial_eps: float = 0.1
    initial_concentration: float = 1.0
    # analyze
    test_functions: tuple = ("coord_x_1", "coord_v_1", "gaussian_bump_x")
    # sweep
    sweep_experiment: str = "simulate"
    sweep_kappa: tuple = ()
    sweep_N: tuple = ()
    sweep_seeds: tuple = ()
    # execution
    workers: int = 1
    input: tuple = ()

    # ------------------------------------------------------------------
    def kernel_spec(self):
        return InteractionKernel(self.kernel, self.kappa, self.length_scale)

    def step_params(self):
        return StepParams(dt=self.dt, scheme=self.scheme, d=self.d)

    def initial_law(self):
        mean = self.position_mean if len(self.position_mean) == self.d else self.position_mean * self.d
        return dict(position_mean=mean, position_sd=self.position_sd,
                    orientation=self.orientation_law,
                    vmf_mu=self.vmf_mu or None, vmf_kappa=self.vmf_kappa)

    @property
    def M(self):
        return self.M_multiplier * self.N

    def normalized(self):
        """Canonical dict: all fields, defaults filled, tuples as lists."""
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @property
    def config_hash(self):
        body = {k: v for k, v in self.normalized().items() if k not in _UNHASHED}
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_text(self):
        lines = [f"# config_hash = {self.config_hash}"]
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(str(t) for t in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **kw):
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg

    # ------------------------------------------------------------------
    def violations(self):
        v = []
        if self.experiment not in EXPERIMENTS:
            v.append(f"experiment: unknown {self.experiment!r} (expected one of {EXPERIMENTS})")
        if self.d not in (2, 3):
            v.append(f"d: must be 2 or 3, got {self.d}")
        if self.N < 1:
            v.append(f"N: must be >= 1, got {self.N}")
        if self.M_multiplier < 8:
            v.append(f"M_multiplier: must be >= 8, got {self.M_multiplier}")
        if self.kernel not in [k.value for k in KernelVariant]:
            v.append(f"kernel: unknown variant {self.kernel!r}; only bounded Lipschitz kernels "
                     f"{[k.value for k in KernelVariant]} are allowed")
        if not self.kappa >= 0:
            v.append(f"kappa: must be >= 0, got {self.kappa}")
        if not self.length_scale > 0:
            v.append(f"length_scale: must be > 0, got {self.length_scale}")
        if self.scheme not in [s.value for s in StepScheme]:
            v.append(f"scheme: unknown {self.scheme!r}")
        if not 0 < self.dt <= DT_CAP:
            v.append(f"dt: must lie in (0, {DT_CAP}], got {self.dt}")
        if not self.T >= 0:
            v.append(f"T: must be >= 0, got {self.T}")
        elif 0 < self.dt and abs(round(self.T / self.dt) * self.dt - self.T) > 1e-9 * max(1, self.T):
            v.append(f"T: {self.T} is not a multiple of dt={self.dt}")
        if not 0 <= self.seed < 2**64:
            v.append(f"seed: must be an unsigned 64-bit integer, got {self.seed}")
        if len(self.position_mean) not in (1, self.d):
            v.append(f"position_mean: need 1 or d={self.d} values, got {len(self.position_mean)}")
        if not (self.position_sd >= 0 and self.position_sd < float("inf")):
            v.append(f"position_sd: must be finite and >= 0 (finite second moment), got {self.position_sd}")
        if self.orientation_law not in ORIENTATION_LAWS:
            v.append(f"orientation_law: must be one of {ORIENTATION_LAWS}, got {self.orientation_law!r}")
        if self.vmf_mu and len(self.vmf_mu) != self.d:
            v.append(f"vmf_mu: need d={self.d} components, got {len(self.vmf_mu)}")
        if self.vmf_mu and sum(t * t for t in self.vmf_mu) < 1e-16:
            v.append("vmf_mu: must be a nonzero vector")
        if not self.vmf_kappa >= 0:
            v.append(f"vmf_kappa: must be >= 0, got {self.vmf_kappa}")
        if self.record_every < 1:
            v.append(f"record_every: must be >= 1, got {self.record_every}")
        if len(self.N_values) and min(self.N_values) < 2:
            v.append("N_values: every N must be >= 2")
        if self.replicas < 8:
            v.append(f"replicas: must be >= 8, got {self.replicas}")
        if self.K_max < 2:
            v.append(f"K_max: must be >= 2, got {self.K_max}")
        if not 0 < self.spectral_dt <= 1e-2:
            v.append(f"spectral_dt: must lie in (0, 0.01], got {self.spectral_dt}")
        if self.initial_density not in INITIAL_DENSITIES:
            v.append(f"initial_density: must be one of {INITIAL_DENSITIES}")
        if not abs(self.initial_eps) < 1:
            v.append("initial_eps: |eps| < 1 keeps the initial density positive")
        for name in self.test_functions:
            try:
                parse_test_function(name, self.d)
            except ValueError as exc:
                v.append(f"test_functions: {exc}")
        if self.sweep_experiment not in SWEEPABLE:
            v.append(f"sweep_experiment: must be one of {SWEEPABLE}")
        if any(n < 1 for n in self.sweep_N):
            v.append("sweep_N: every N must be >= 1")
        if any(k < 0 for k in self.sweep_kappa):
            v.append("sweep_kappa: every kappa must be >= 0")
        if self.workers < 1:
            v.append(f"workers: must be >= 1, got {self.workers}")
        return v

    def validate(self):
        v = self.violations()
        if v:
            raise ConfigError(v)
        return self


def parse_test_function(name, d):
    from .observables import TestFunction

    for prefix in ("coord_x_", "coord_v_"):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            k = int(name[len(prefix):])
            if not 1 <= k <= d:
                raise ValueError(f"{name}: component must be in 1..{d}")
            return TestFunction(prefix + "k", k=k - 1)
    if name in ("constant", "quadratic_x", "x_dot_v", "gaussian_bump_x"):
        return TestFunction(name)
    raise ValueError(f"unknown test function {name!r}")


_CONVERTERS = {int: _int, float: float, str: str.strip}
_TUPLE_KIND = {
    "position_mean": _floats, "vmf_mu": _floats, "N_values": _ints, "test_functions": _words,
    "sweep_kappa": _floats, "sweep_N": _ints, "sweep_seeds": _ints, "input": _words,
}


def parse_config_text(text, source="<string>"):
    """Parse ``key = value`` lines (``#`` comments) into a validated RunConfig."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values, seen, problems = {}, {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = (t.strip() for t in line.split("=", 1))
        if key not in types:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        if key in seen:
            problems.append(f"{source}:{lineno}: duplicate key {key!r} (first on line {seen[key]})")
            continue
        seen[key] = lineno
        try:
            conv = _TUPLE_KIND.get(key) or _CONVERTERS[types[key]]
            values[key] = conv(val)
        except ValueError:
            problems.append(f"{source}:{lineno}: key {key!r}: cannot parse {val!r} as {types[key].__name__}")
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config_text(text, source=str(path))
