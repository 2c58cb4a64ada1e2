"""The four-term toy model: how an electric field aligns 2P.

Radiation at 20000 K (dilution 1/2) pumps 1S, 2S, 2P and 3P through the
Lyman and Balmer lines.  Without a field nothing is aligned.  A field mixes
2S with the M = 0 sublevels of 2P, and because the two terms are populated
out of their equilibrium ratio, the mixing leaves 2P aligned.
"""

import math

import numpy as np

from hydrogen_alignment.hydrogen_model import CONSTANTS
from hydrogen_alignment.radiation_field import Illumination
from hydrogen_alignment.toy_model import ToyRates, toy_lyman_alpha_blp, toy_solve, two_term_factor

rates = ToyRates.from_illumination(Illumination())
print("toy rates (1/s):")
for name, value in rates.as_dict().items():
    print(f"  {name:5s} {value:.4e}")

print("\nnormalized 2P alignment a_2P / (N_2P - 3 N_2S) against field strength")
print(f"{'E (V/cm)':>10s} {'omega_E (rad/s)':>16s} {'a_2P normalized':>16s} {'Ly-a blp':>10s}")
for E_cm in np.logspace(-2, 5, 15):
    w = CONSTANTS.omega_E_per_V_per_m * 100 * E_cm
    s = toy_solve(rates, w)
    print(f"{E_cm:10.3g} {w:16.4e} {s.normalized_alignment:16.8f} {toy_lyman_alpha_blp(s):10.2e}")
print(f"strong-field limit 1/sqrt(6) = {1 / math.sqrt(6):.8f}")

# Without 3P the imbalance driving the alignment vanishes for any rates.
print("\nwithout 3P: two_term_factor =", two_term_factor(rates.without_3P()))

# Pumping through Ly-beta alone reaches 2P only through the 3P -> 2S cascade
# (3P -> 2P is dipole forbidden) and field mixing of 2S with the M = 0
# sublevel of 2P: in a strong field every Ly-alpha photon comes from M = 0.
lyb = ToyRates.from_illumination(Illumination.only_lines(["Ly_beta"]))
s = toy_solve(lyb, 1e6 * lyb.max_rate)
print(f"Ly-beta pumping, strong field: Ly-alpha blp = {100 * toy_lyman_alpha_blp(s):.4f} %")
