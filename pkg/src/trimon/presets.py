"""Reference parameter sets for the three-mode device studied throughout the tutorials."""
from __future__ import annotations

from .circuit import CircuitSpec, ModeParams

#: simulated capacitances of the design layout, fF (diagonal entries are to ground)
DESIGN_PAIRWISE_FF = {(1, 2): 21.0, (1, 3): 4.0, (1, 4): 21.0,
                      (2, 3): 21.0, (2, 4): 3.0, (3, 4): 21.0}
DESIGN_GROUND_FF = {1: 46.0, 2: 30.0, 3: 53.0, 4: 36.0}
DESIGN_EJ_HZ = 8.16e9

#: analytic mode frequencies quoted for the design circuit, Hz
DESIGN_MODE_FREQUENCIES = (4.691e9, 5.195e9, 5.957e9)

# measured device: 0->1 frequencies, anharmonicities 2J_mu, dispersive shifts 2J_mu,nu (AB, BC, CA)
DEVICE_F01 = (4.709e9, 5.174e9, 5.940e9)
DEVICE_ANHARMONICITY = (118e6, 129e6, 164e6)
DEVICE_SHIFT = (211e6, 270e6, 243e6)
DEVICE_T1 = (54e-6, 38e-6, 33e-6)
DEVICE_T2 = (45e-6, 34e-6, 30e-6)


def design_circuit() -> CircuitSpec:
    return CircuitSpec.from_femtofarads(DESIGN_PAIRWISE_FF, DESIGN_GROUND_FF, DESIGN_EJ_HZ)


def device_params() -> ModeParams:
    return ModeParams.from_measured(DEVICE_F01, DEVICE_ANHARMONICITY, DEVICE_SHIFT,
                                    meta={"source": "measured"})


def device_noise(sigma=(0.0, 0.0, 0.0)):
    from .dynamics import NoiseChannels

    return NoiseChannels(T1=DEVICE_T1, T2=DEVICE_T2, quasi_static_sigma=sigma)
