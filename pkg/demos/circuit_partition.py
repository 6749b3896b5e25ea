"""Walk through the varactor reflection model and the capacitance partition.

A single tunable element is an LC circuit loaded with a varactor diode.
Sweeping the varactor capacitance moves the element's effective impedance,
and the reflection coefficient theta = (Z - Z0) / (Z + Z0) traces a curve
inside the unit disk.  The phase swing that the sweep can reach depends
strongly on the carrier frequency, which is why one physical surface can
serve several bands at once: each band gets its own slice of the
capacitance range.
"""

import numpy as np

from irsim.reflection import (FrequencyPlan, DEFAULT_CIRCUIT, DEFAULT_FREQUENCIES,
                              partition_capacitance, reflection_coefficient)


def main():
    c_grid = np.linspace(0.5e-12, 6e-12, 2000)

    print("Phase swing reachable by sweeping C in [1.3, 2.0] pF:")
    sub = np.linspace(1.3e-12, 2.0e-12, 2000)
    for f in DEFAULT_FREQUENCIES:
        ang = np.unwrap(np.angle(reflection_coefficient(DEFAULT_CIRCUIT, sub, f)))
        print("  f = %.3f GHz  swing = %6.1f deg" % (f / 1e9,
                                                     np.degrees(np.ptp(ang))))

    print()
    print("Amplitude loss (the circuit has a 1 ohm series resistance):")
    for f in DEFAULT_FREQUENCIES:
        mag = np.abs(reflection_coefficient(DEFAULT_CIRCUIT, c_grid, f))
        print("  f = %.3f GHz  |theta| in [%.3f, %.3f]" % (f / 1e9,
                                                           mag.min(), mag.max()))

    # The partition assigns each carrier a disjoint capacitance interval that
    # covers most of that carrier's usable phase swing.  Elements tuned for
    # one band then sit in a "quiet" region of the other bands' responses.
    part = partition_capacitance(DEFAULT_CIRCUIT, FrequencyPlan(DEFAULT_FREQUENCIES))
    print()
    print("Capacitance partition (descending frequency):")
    for f, (lo, hi) in zip(part.frequencies, part.intervals):
        print("  f = %.3f GHz  C in [%.3f, %.3f] pF" % (f / 1e9,
                                                        lo * 1e12, hi * 1e12))
    print("Unused (guard) ranges:")
    for lo, hi in part.gray:
        print("  C in [%.3f, %.3f] pF" % (lo * 1e12, hi * 1e12))


if __name__ == "__main__":
    main()
