"""Built-in surrogate system models behind a black-box simulation interface.

Every model is driven by the same kernel: _start consumes input sample 0
and yields the initial state, _step advances one grid step consuming the
input sample at the step's right endpoint (zero-order hold across the
step), and _output reads the observable sample from a state.  simulate and
snapshot_simulate share this kernel, which is what makes the resimulate
and snapshot continuation paths agree bit-for-bit: a continuation replays
exactly the step sequence the full simulation would have run.

Because sample 0 never drives a step, the sample at a stage boundary
belongs to the committed prefix, matching the half-open junction
convention of signal concatenation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .signals import Signal, concatenate


@dataclass(frozen=True)
class ModelState:
    """Snapshot of a model's internal state; round-trips through JSON exactly."""

    payload: tuple

    def to_json(self) -> str:
        return json.dumps(list(self.payload))

    @staticmethod
    def from_json(text: str) -> "ModelState":
        return ModelState(tuple(json.loads(text)))


class SystemModel:
    """Deterministic causal model sampled at a fixed dt."""

    name = "model"
    input_names: tuple = ("u",)
    output_names: tuple = ("y",)
    # declared, not verified; the theory checks exist to probe it
    monotone = False

    def __init__(self, dt: float = 0.05):
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = dt

    @property
    def input_dim(self) -> int:
        return len(self.input_names)

    @property
    def output_dim(self) -> int:
        return len(self.output_names)

    @property
    def input_bounds(self) -> np.ndarray:
        raise NotImplementedError

    def _start(self, u0: np.ndarray) -> tuple:
        raise NotImplementedError

    def _step(self, state: tuple, u: np.ndarray) -> tuple:
        raise NotImplementedError

    def _output(self, state: tuple) -> tuple:
        raise NotImplementedError

    def _check_input(self, w: Signal):
        if w.dim != self.input_dim:
            raise ValueError(f"{self.name} expects {self.input_dim} input channels, got {w.dim}")
        if w.dt != self.dt:
            raise ValueError(f"{self.name} runs at dt={self.dt}, input has dt={w.dt}")

    def simulate(self, w: Signal) -> Signal:
        return self.simulate_with_state(w)[0]

    def simulate_with_state(self, w: Signal) -> tuple[Signal, ModelState]:
        self._check_input(w)
        state = self._start(w.samples[0])
        out = np.empty((w.n, self.output_dim))
        out[0] = self._output(state)
        for k in range(1, w.n):
            state = self._step(state, w.samples[k])
            out[k] = self._output(state)
        return Signal(self.dt, out), ModelState(state)

    def snapshot_simulate(self, state: ModelState, w: Signal) -> tuple[Signal, ModelState]:
        """Resume from a snapshot; w's sample 0 is the junction and is not consumed."""
        self._check_input(w)
        s = state.payload
        out = np.empty((w.n, self.output_dim))
        out[0] = self._output(s)
        for k in range(1, w.n):
            s = self._step(s, w.samples[k])
            out[k] = self._output(s)
        return Signal(self.dt, out), ModelState(s)


def check_bounds(model: SystemModel, w: Signal):
    bounds = model.input_bounds
    low = w.samples < bounds[:, 0] - 1e-12
    high = w.samples > bounds[:, 1] + 1e-12
    if np.any(low) or np.any(high):
        raise ValueError(f"input leaves the bounds of {model.name}")


class Continuation:
    """The model as seen after committing an input prefix.

    simulate(w) returns the output over the continuation window; sample 0
    duplicates the prefix's final output and w's sample 0 (the junction
    instant) is ignored, mirroring concatenation.  path="resimulate"
    replays the whole prefix each call; path="snapshot" restores a stored
    state.  Both give bit-identical outputs.
    """

    def __init__(self, model: SystemModel, prefix: Signal | None, path: str = "resimulate"):
        if path not in ("resimulate", "snapshot"):
            raise ValueError(f"unknown continuation path {path!r}")
        if prefix is not None:
            check_bounds(model, prefix)
        self.model = model
        self.prefix = prefix
        self.path = path
        self._state = None
        if path == "snapshot" and prefix is not None:
            self._state = model.simulate_with_state(prefix)[1]

    # facade: a continuation drops into any place a model fits
    @property
    def name(self) -> str:
        return self.model.name

    @property
    def dt(self) -> float:
        return self.model.dt

    @property
    def input_names(self) -> tuple:
        return self.model.input_names

    @property
    def output_names(self) -> tuple:
        return self.model.output_names

    @property
    def input_dim(self) -> int:
        return self.model.input_dim

    @property
    def output_dim(self) -> int:
        return self.model.output_dim

    @property
    def input_bounds(self) -> np.ndarray:
        return self.model.input_bounds

    def simulate(self, w: Signal) -> Signal:
        if self.prefix is None:
            return self.model.simulate(w)
        if self.path == "snapshot":
            return self.model.snapshot_simulate(self._state, w)[0]
        full = self.model.simulate(concatenate(self.prefix, w))
        return Signal(full.dt, full.samples[self.prefix.n - 1 :])


def continuation(model: SystemModel, prefix: Signal | None, path: str = "resimulate") -> Continuation:
    return Continuation(model, prefix, path)


def _rk4_linear(v: float, drive: float, decay: float, dt: float) -> float:
    """One RK4 step of dv/dt = drive - decay*v with the drive held constant."""
    k1 = drive - decay * v
    k2 = drive - decay * (v + 0.5 * dt * k1)
    k3 = drive - decay * (v + 0.5 * dt * k2)
    k4 = drive - decay * (v + dt * k3)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class Powertrain(SystemModel):
    """First-order speed lag: dv/dt = k_a*u - k_d*v.

    Steady state under full throttle is k_a*100/k_d = 200, so a ceiling of
    120 is reachable and the model is monotone in its single input.
    """

    name = "powertrain"
    input_names = ("u",)
    output_names = ("v",)
    monotone = True

    def __init__(self, dt: float = 0.05, k_a: float = 0.5, k_d: float = 0.25, v0: float = 0.0):
        super().__init__(dt)
        self.k_a = k_a
        self.k_d = k_d
        self.v0 = v0

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([[0.0, 100.0]])

    def _start(self, u0):
        return (self.v0,)

    def _step(self, state, u):
        (v,) = state
        return (_rk4_linear(v, self.k_a * float(u[0]), self.k_d, self.dt),)

    def _output(self, state):
        return state


class AutoTransmission(SystemModel):
    """Driveline surrogate with a hysteretic gear indicator.

    Speed follows a linear lag in throttle and brake, clamped at zero:
    dv/dt = accel*throttle - brake_gain*brake - drag*v.  The gear is a
    hysteresis quantizer driven by engine speed omega = idle +
    c_omega*R(g)*v; it is reported (so g = 3 atoms are expressible) but
    feeds nothing back into the velocity dynamics, keeping speed exactly
    monotone in throttle.  Shift thresholds omega_up/omega_down are strict
    and the ratio ladder leaves a gap after each shift, so the gear cannot
    chatter.  Calibration: top speed 160 under full throttle, omega
    reaches the upshift threshold near v = 20/32/50 in gears 1-3.
    """

    name = "auto_transmission"
    input_names = ("throttle", "brake")
    output_names = ("v", "omega", "g")

    def __init__(
        self,
        dt: float = 0.05,
        accel: float = 1.6,
        brake_gain: float = 0.6,
        drag: float = 1.0,
        ratios: tuple = (4.0, 2.5, 1.6, 1.0),
        c_omega: float = 42.5,
        idle: float = 600.0,
        omega_up: float = 4000.0,
        omega_down: float = 1800.0,
    ):
        super().__init__(dt)
        self.accel = accel
        self.brake_gain = brake_gain
        self.drag = drag
        self.ratios = tuple(ratios)
        self.c_omega = c_omega
        self.idle = idle
        self.omega_up = omega_up
        self.omega_down = omega_down

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([[0.0, 100.0], [0.0, 325.0]])

    def _omega(self, v: float, g: int) -> float:
        return self.idle + self.c_omega * self.ratios[g - 1] * v

    def _start(self, u0):
        return (0.0, 1)

    def _step(self, state, u):
        v, g = state
        drive = self.accel * float(u[0]) - self.brake_gain * float(u[1])
        v = _rk4_linear(v, drive, self.drag, self.dt)
        if v < 0.0:
            v = 0.0
        for _ in range(len(self.ratios) - 1):
            w = self._omega(v, g)
            if w > self.omega_up and g < len(self.ratios):
                g += 1
            elif w < self.omega_down and g > 1:
                g -= 1
            else:
                break
        return (v, g)

    def _output(self, state):
        v, g = state
        return (v, self._omega(v, g), float(g))


class FuelControl(SystemModel):
    """Air-fuel ratio tracking with transient spikes on pedal changes.

    AF relaxes to af_ref through a first-order lag (integrated exactly per
    step) and jumps by k_p * (pedal change) at each control instant, so
    only sharp pedal steps push AF far from stoichiometric.  The engine
    speed channel exists for interface parity with the benchmark and does
    not enter the dynamics.
    """

    name = "fuel_control"
    input_names = ("pedal", "engine_speed")
    output_names = ("AF",)

    def __init__(self, dt: float = 0.05, tau: float = 3.0, k_p: float = 0.05, af_ref: float = 14.7):
        super().__init__(dt)
        self.tau = tau
        self.k_p = k_p
        self.af_ref = af_ref
        self._decay = math.exp(-dt / tau)

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([[0.0, 61.1], [0.0, 1100.0]])

    def _start(self, u0):
        return (self.af_ref, float(u0[0]))

    def _step(self, state, u):
        af, prev = state
        pedal = float(u[0])
        af = af + self.k_p * (pedal - prev)
        af = self.af_ref + (af - self.af_ref) * self._decay
        return (af, pedal)

    def _output(self, state):
        return (state[0],)


class StatelessMap(SystemModel):
    """Memoryless map y(t) = u(t) + amplitude*sin(omega0*t)."""

    name = "stateless_map"
    input_names = ("u",)
    output_names = ("y",)

    def __init__(self, dt: float = 0.05, amplitude: float = 0.5, omega0: float = 0.5):
        super().__init__(dt)
        self.amplitude = amplitude
        self.omega0 = omega0

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([[0.0, 10.0]])

    def _start(self, u0):
        return (0, float(u0[0]))

    def _step(self, state, u):
        k, _ = state
        return (k + 1, float(u[0]))

    def _output(self, state):
        k, u = state
        return (u + self.amplitude * math.sin(self.omega0 * k * self.dt),)


class MonotoneIntegrator(SystemModel):
    """Pure integrator dx/dt = u with nonnegative input, x(0) = 0.

    x(t_k) is exactly dt * (u[1] + ... + u[k]); with inputs confined to
    [0, 1] the trajectory is nondecreasing, which gives the model the
    monotone-system property in closed form.
    """

    name = "monotone_integrator"
    input_names = ("u",)
    output_names = ("x",)
    monotone = True

    def __init__(self, dt: float = 0.05):
        super().__init__(dt)

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([[0.0, 1.0]])

    def _start(self, u0):
        return (0.0,)

    def _step(self, state, u):
        return (state[0] + self.dt * float(u[0]),)

    def _output(self, state):
        return state


class Oscillator(SystemModel):
    """Underdamped second-order tracker; overshoots, so not monotone.

    Used as the negative control for the monotonicity checks.  Not part of
    the builtin registry: it exists to show that a model whose output can
    rise and fall breaks full time monotonicity.
    """

    name = "oscillator"
    input_names = ("u",)
    output_names = ("x",)

    def __init__(self, dt: float = 0.05, omega_n: float = 2.0, zeta: float = 0.2):
        super().__init__(dt)
        self.omega_n = omega_n
        self.zeta = zeta

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([[0.0, 1.0]])

    def _start(self, u0):
        return (0.0, 0.0)

    def _step(self, state, u):
        x, xd = state
        dt = self.dt
        wn2 = self.omega_n * self.omega_n
        damp = 2.0 * self.zeta * self.omega_n
        target = float(u[0])

        def f(x_, xd_):
            return xd_, wn2 * (target - x_) - damp * xd_

        k1x, k1v = f(x, xd)
        k2x, k2v = f(x + 0.5 * dt * k1x, xd + 0.5 * dt * k1v)
        k3x, k3v = f(x + 0.5 * dt * k2x, xd + 0.5 * dt * k2v)
        k4x, k4v = f(x + dt * k3x, xd + dt * k3v)
        return (
            x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            xd + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )

    def _output(self, state):
        return (state[0],)


BUILTIN_MODELS = {
    "powertrain": Powertrain,
    "auto_transmission": AutoTransmission,
    "fuel_control": FuelControl,
    "stateless_map": StatelessMap,
    "monotone_integrator": MonotoneIntegrator,
}


def builtin(name: str, dt: float = 0.05, **params) -> SystemModel:
    """Construct a built-in model by name."""
    try:
        cls = BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r} (available: {', '.join(sorted(BUILTIN_MODELS))})"
        ) from None
    return cls(dt=dt, **params)
