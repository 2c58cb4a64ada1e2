"""Broadband polarization of Lyman-alpha in electric and magnetic fields.

An electric field aligns the atom and makes Ly-alpha linearly polarized.  A
magnetic field along z then turns part of the alignment into orientation
(alignment-to-orientation conversion), which shows up as circular
polarization seen along z.  Viewing directions: "perp" at 90 degrees to z,
"par" along z.  Positive Q means polarization perpendicular to the projected
z axis.
"""

import math

from hydrogen_alignment.field_sweep import FieldDistribution, default_grid, sweep
from hydrogen_alignment.hydrogen_model import build_levels
from hydrogen_alignment.radiation_field import Illumination

scheme = build_levels(3)
grid = default_grid(15)
B = (0.0, 0.0, 0.1)  # 1000 G

for theta in (0.0, 30.0, 60.0, 90.0):
    res = sweep(scheme, Illumination(), B, FieldDistribution.random_azimuth(math.radians(theta)), grid)
    print(f"\nE inclined {theta:g} deg to B, random azimuth")
    print(f"{'E (V/cm)':>10s} {'blp perp':>12s} {'bcp par':>12s}")
    for row in res.rows:
        perp, par = row.stokes[("Ly_alpha", "perp")], row.stokes[("Ly_alpha", "par")]
        print(f"{row.E_V_per_cm:10.3g} {perp.blp:12.3e} {par.bcp:12.3e}")

# Averaging over isotropic field directions removes most of the signal; in
# strong fields the Stark splitting dominates B and the average is unpolarized.
iso = sweep(scheme, Illumination(), B, FieldDistribution.isotropic(), grid[[6, 10, 14]])
print("\nisotropic field directions")
for row in iso.rows:
    print(f"{row.E_V_per_cm:10.3g} {row.stokes[('Ly_alpha', 'perp')].blp:12.3e}")
