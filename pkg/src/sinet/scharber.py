"""Scharber estimate of open-circuit voltage and power conversion efficiency.

Energies are in eV, so the elementary charge cancels and the voltage comes
out in volts. The donor-minus-acceptor difference is taken literally with
signed orbital energies; :func:`open_circuit_voltage_magnitude` gives the
common ``|E_HOMO| - |E_LUMO|`` alternative, which is not the default.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "VOLTAGE_LOSS_V",
    "ScharberInputs",
    "open_circuit_voltage",
    "open_circuit_voltage_magnitude",
    "pce",
]

VOLTAGE_LOSS_V = 0.3


@dataclass(frozen=True)
class ScharberInputs:
    e_homo_donor: float
    e_lumo_acceptor: float
    fill_factor: float
    j_sc: float  # mA/cm^2
    p_in: float = 100.0  # mW/cm^2

    def __post_init__(self):
        if not self.p_in > 0:
            raise ValueError(f"incident power must be positive, got {self.p_in}")
        if not 0 < self.fill_factor <= 1:
            raise ValueError(f"fill factor must lie in (0, 1], got {self.fill_factor}")
        if self.j_sc < 0:
            raise ValueError(f"short-circuit current must be >= 0, got {self.j_sc}")


def open_circuit_voltage(e_homo_donor, e_lumo_acceptor):
    """``(E_HOMO,donor - E_LUMO,acceptor) - 0.3`` in volts."""
    return (e_homo_donor - e_lumo_acceptor) - VOLTAGE_LOSS_V


def open_circuit_voltage_magnitude(e_homo_donor, e_lumo_acceptor):
    return (abs(e_homo_donor) - abs(e_lumo_acceptor)) - VOLTAGE_LOSS_V


def pce(voc, fill_factor, j_sc=None, p_in=None):
    """Efficiency in percent: ``100 * Voc * FF * Jsc / Pin``.

    Either pass ``pce(voc, inputs)`` with a :class:`ScharberInputs` or the
    three scalars. V * mA/cm^2 = mW/cm^2, so the ratio is dimensionless.
    """
    if isinstance(fill_factor, ScharberInputs):
        inputs = fill_factor
        fill_factor, j_sc, p_in = inputs.fill_factor, inputs.j_sc, inputs.p_in
    if p_in is None or not p_in > 0:
        raise ValueError(f"incident power must be positive, got {p_in}")
    return 100.0 * (voc * fill_factor * j_sc) / p_in
