"""
From predicted HOMO to device efficiency, and conformer averaging
"""

import numpy as np

from sinet.data_io import boltzmann_average, boltzmann_weights
from sinet.scharber import open_circuit_voltage, open_circuit_voltage_magnitude, pce

print("Scharber estimate, FF=0.65, Jsc=15 mA/cm^2, Pin=100 mW/cm^2")
print(f"{'HOMO':>6} {'LUMO':>6} {'Voc':>7} {'PCE%':>7} | {'Voc|.|':>7} {'PCE%':>7}")
for homo in (-5.6, -5.3, -5.0):
    for lumo in (-4.3, -3.9):
        voc = open_circuit_voltage(homo, lumo)
        voc_m = open_circuit_voltage_magnitude(homo, lumo)
        print(f"{homo:>6} {lumo:>6} {voc:>7.3f} {pce(voc, 0.65, 15, 100):>7.3f} | "
              f"{voc_m:>7.3f} {pce(voc_m, 0.65, 15, 100):>7.3f}")
# the signed formula gives negative voltages for typical pairs; the right-hand
# columns use energy magnitudes instead

print("\nBoltzmann weighting of three conformers")
conformers = [(-5.20, 0.00), (-5.35, 0.03), (-5.05, 0.10)]
for t in (1e-6, 100.0, 298.15, 1000.0, 1e9):
    w = boltzmann_weights([e for _, e in conformers], t)
    print(f"T={t:>9.3g} K  weights {np.round(w, 4)}  HOMO {boltzmann_average(conformers, t):.5f} eV")
print("plain mean:", np.mean([h for h, _ in conformers]))
