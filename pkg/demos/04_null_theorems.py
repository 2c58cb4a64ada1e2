"""Situations that must leave the atom unpolarized.

* Thermodynamic equilibrium: Planck radiation at the gas temperature gives
  Boltzmann populations in every field, so the field has nothing to align.
* A magnetic field alone: it only rotates polarization that already exists.
* Only two terms (no 3P): the population imbalance behind the alignment
  cancels identically.
The polarization ratio printed is the largest K > 0 term multipole relative
to the K = 0 ones.
"""

from hydrogen_alignment.density_matrix import observables, polarization_ratio
from hydrogen_alignment.hydrogen_model import build_levels, restrict_to_toy
from hydrogen_alignment.radiation_field import Illumination
from hydrogen_alignment.se_solver import FieldConfig, solve

scheme = build_levels(3)
strong = FieldConfig((3e5, 1e5, -2e5), (0.2, -0.1, 0.4))

rho = solve(scheme, Illumination.planck_te(20000.0), strong)
print(f"Planck 20000 K, oblique E and B:   polarization ratio {polarization_ratio(rho):.1e}")

rho = solve(scheme, Illumination(), FieldConfig((0, 0, 0), (0.2, -0.1, 0.4)))
print(f"diluted Planck, B only:            polarization ratio {polarization_ratio(rho):.1e}")

rho = solve(scheme, Illumination(), strong)
print(f"diluted Planck, same E and B:      polarization ratio {polarization_ratio(rho):.1e}")

ob = observables(solve(restrict_to_toy(), Illumination.only_lines(["Ly_alpha"]), FieldConfig.polar(1e4)))
print(f"Ly-alpha pumping only (two terms): a_2P = {ob.a_2P:.1e}, c_2S2P = {ob.c_2S2P:.1e}")
