"""Registry of ready-to-run experiment presets.

Each preset is a named bundle of configuration values plus a description;
descriptions flag every parameter that is a choice of this package rather
than part of the experiment being reproduced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

_PI = math.pi

#: the four-soliton case-study data used by several presets
CASE_STUDY = {
    "a": [-1.0, -1.5, 0.0, 1.0],
    "v": [-2.0, 0.0, 3.0, 0.0],
    "theta": [_PI / 3.0, 0.0, -3.0, -5.0],
    "mu": [17.0, 25.0, 23.0, 19.0],
}


def _case_study(n: int) -> dict:
    return {
        "n": n,
        "a": CASE_STUDY["a"][:n],
        "v": CASE_STUDY["v"][:n],
        "theta": CASE_STUDY["theta"][:n],
        "mu": CASE_STUDY["mu"][:n],
    }


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    values: dict
    long_running: bool = False


_REGISTRY: dict[str, Preset] = {}


def _register(name, description, values, long_running=False):
    _REGISTRY[name] = Preset(name, description, values, long_running)


_register(
    "fig-perfectmatch",
    "Four solitons in the deep well -100*exp(cos(x)); full PDE vs reduced "
    "dynamics to t=1, where the two solutions are nearly indistinguishable.",
    {
        "kind": "compare",
        "model": "nls",
        "potential": "-100*exp(cos(x))",
        "h": 1.0,
        **_case_study(4),
        "t_final": 1.0,
        "dt": 1e-4,
        "grid_n": 4096,
        "stride": 50,
    },
)

_register(
    "fig-comp",
    "Four solitons over the sharp dip -100*sech(5*x)^2 + 10*x^4 to t=0.7; "
    "the dip is as narrow as the solitons, so the reduced dynamics shows a "
    "clearly visible discrepancy from the PDE.",
    {
        "kind": "compare",
        "model": "nls",
        "potential": "-100*sech(5*x)^2 + 10*x^4",
        "h": 1.0,
        **_case_study(4),
        "t_final": 0.7,
        "dt": 1e-4,
        "grid_n": 4096,
        "stride": 50,
    },
)

_register(
    "fig-bunchspread",
    "Soliton-train oscillation: four solitons with alternating phases and a "
    "common velocity in the shallow bowl (x/2)^6, bunching and spreading "
    "under the reduced dynamics. Positions, velocities and masses are "
    "choices of this package (only the potential, the alternating phases "
    "and N=4 are given).",
    {
        "kind": "effective-only",
        "model": "nls",
        "potential": "(x/2)^6",
        "h": 1.0,
        "n": 4,
        "a": [-0.75, -0.25, 0.25, 0.75],
        "v": [1.5, 1.5, 1.5, 1.5],
        "theta": [0.0, _PI, 0.0, _PI],
        "mu": [30.0, 31.0, 32.0, 33.0],
        "t_final": 10.0,
        "dt": 1e-4,
        "dt_ode": 1e-3,
        "grid_n": 4096,
        "stride": 10,
    },
)

_register(
    "sweep-loglog",
    "h-sweep of the relative H1 gap between PDE and reduced dynamics for "
    "one soliton in W(h*x), W = -100*sech(5*x)^2 + 10*x^4; log-log slope "
    "fitted on the 6 smallest h (horizon t=0.3 and the h grid are choices "
    "of this package).",
    {
        "kind": "h-sweep",
        "model": "nls",
        "potential": "-100*sech(5*x)^2 + 10*x^4",
        **_case_study(1),
        "t_final": 0.3,
        "dt": 2e-4,
        "dt_ode": 2e-4,
        "grid_n": 2048,
        "stride": 25,
        "sweep_metric": "max",
        "fit_k": 6,
    },
)

_register(
    "sweep-loglog-n2",
    "Two-soliton variant of sweep-loglog.",
    {
        "kind": "h-sweep",
        "model": "nls",
        "potential": "-100*sech(5*x)^2 + 10*x^4",
        **_case_study(2),
        "t_final": 0.3,
        "dt": 2e-4,
        "dt_ode": 2e-4,
        "grid_n": 2048,
        "stride": 25,
        "sweep_metric": "max",
        "fit_k": 6,
    },
)

_register(
    "sweep-loglog-n3",
    "Three-soliton variant of sweep-loglog (long-running).",
    {
        "kind": "h-sweep",
        "model": "nls",
        "potential": "-100*sech(5*x)^2 + 10*x^4",
        **_case_study(3),
        "t_final": 0.3,
        "dt": 2e-4,
        "dt_ode": 2e-4,
        "grid_n": 2048,
        "stride": 25,
        "sweep_metric": "max",
        "fit_k": 6,
    },
    long_running=True,
)

_register(
    "sweep-loglog-n4",
    "Four-soliton variant of sweep-loglog (long-running).",
    {
        "kind": "h-sweep",
        "model": "nls",
        "potential": "-100*sech(5*x)^2 + 10*x^4",
        **_case_study(4),
        "t_final": 0.3,
        "dt": 2e-4,
        "dt_ode": 2e-4,
        "grid_n": 2048,
        "stride": 25,
        "sweep_metric": "max",
        "fit_k": 6,
    },
    long_running=True,
)

_register(
    "ehrenfest",
    "Exponential error growth at an unstable equilibrium: one soliton "
    "q(x; 0.1, 0, 0, 15) on W(h*x), W = -1000*x^2, for several h. Each run "
    "uses the width rescaling with alpha=h so the sliding soliton stays in "
    "the computational domain; errors are fitted to A*(exp(B*t)+C) on the "
    "window where the position lies in [0.15/h, 1.2/h], and B is regressed "
    "against h.",
    {
        "kind": "ehrenfest",
        "model": "nls",
        "potential": "-1000*x^2",
        "n": 1,
        "a": [0.1],
        "v": [0.0],
        "theta": [0.0],
        "mu": [15.0],
        "t_final": 0.0,  # horizon is window-driven per h
        "dt": 2e-5,
        "dt_ode": 2e-5,
        "stride": 20,
        "h_values": [0.5, 0.35, 0.25, 0.18],
    },
)

_register(
    "bench-etd-vs-imex",
    "Temporal convergence and wall-clock comparison of the exponential "
    "(ETDRK4) and additive IMEX (ARK4(3)6L[2]SA) steppers on the one-soliton "
    "case-study problem; reports the measured orders and the runtime ratio "
    "at matched accuracy.",
    {
        "kind": "scheme-bench",
        "model": "nls",
        "potential": "-100*sech(5*x)^2 + 10*x^4",
        **_case_study(1),
        "t_final": 0.1,
        "dt_values": [4e-4, 2e-4, 1e-4, 5e-5],
        "grid_n": 4096,
        "target_accuracy": 1e-8,
    },
)

_register(
    "mkdv-compare",
    "Three mKdV solitons bouncing in the wells of b(x) = 300*cos(x)^2; "
    "full PDE vs reduced dynamics. Soliton speeds, positions and the "
    "alternating polarities are choices of this package (only the "
    "potential and N=3 are given).",
    {
        "kind": "mkdv-compare",
        "model": "mkdv",
        "potential": "300*cos(x)^2",
        "h": 1.0,
        "n": 3,
        "a": [-2.0, -1.55, -1.1],
        "c": [12.0, 15.0, 18.0],
        "phases": [1.0, -1.0, 1.0],
        "t_final": 0.05,
        "dt": 2e-6,
        "dt_ode": 2e-5,
        "grid_n": 2048,
        "stride": 500,
    },
)

_register(
    "mkdv-sweep-loglog",
    "h-sweep of the H1 gap for one mKdV soliton in b(x) = 300*cos(hx)^2, "
    "run in width-rescaled coordinates (the soliton oscillates in the well "
    "at hx = pi/2); log-log slope fitted on the 6 smallest h. The speed "
    "c=10, the well placement and the horizon are choices of this package.",
    {
        "kind": "mkdv-h-sweep",
        "model": "mkdv",
        "potential": "300*cos(x)^2",
        "n": 1,
        "a": [0.0],  # placed at the well centre pi/(2h) internally
        "c": [10.0],
        "t_final": 0.02,  # original-time horizon
        "dt": 1e-5,  # explicit b*u term: k_max * b~ * dt~ must stay inside RK4 stability
        "dt_ode": 5e-5,
        "stride": 50,
        "fit_k": 6,
    },
)

_register(
    "mkdv-sweep-loglog-n2",
    "Two-soliton variant of mkdv-sweep-loglog (long-running).",
    {
        "kind": "mkdv-h-sweep",
        "model": "mkdv",
        "potential": "300*cos(x)^2",
        "n": 2,
        "a": [-0.35, 0.3],  # offsets from the well centre
        "c": [9.0, 12.0],
        "t_final": 0.02,
        "dt": 1e-5,
        "dt_ode": 5e-5,
        "stride": 50,
        "fit_k": 6,
    },
    long_running=True,
)


def get_preset(name: str) -> Preset:
    if name not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}", key="preset")
    return _REGISTRY[name]


def all_presets() -> list[Preset]:
    return [p for _, p in sorted(_REGISTRY.items())]
