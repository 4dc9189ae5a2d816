"""Frozen reference values from independent methods.

J0 samples come from scipy.special.j0 (Cephes), the gap Lamb shift from
scipy.integrate.quad of the zone average of 1/(ω(k) - ω0). Everything else
used by the tests is closed-form arithmetic written out in place.
"""

J0_SAMPLES = [
    (0.0, 1.0),
    (0.5, 0.938469807240813),
    (1.5, 0.5118276717359181),
    (1.5707963267948966, 0.4720012157682347),
    (5.0, -0.1775967713143383),
    (7.9, 0.1943618448412782),
    (8.1, 0.14751745404437763),
    (12.0, 0.04768931079683335),
    (20.0, 0.16702466434058322),
    (24.9, 0.08324596835301536),
    (25.1, 0.10827567149994938),
    (40.0, 0.007366890584236951),
    (75.0, 0.034643913805097286),
]

J0_FIRST_ZERO = 2.404825557695773

# A = 1, B = 0.5, gamma = 1, omega0 = 0.1:  -<1/(ω_k - ω0)>_BZ = -1/sqrt((A-ω0)^2 - B^2)
LAMB_SHIFT_GAP = -1.3363062095621239

# Deep-gap point (N=2, M=50, ring, A=1, B=0.5, g=0.1, omega0=0.1, J=0): dense eigh of the
# 52x52 single-excitation matrix written out by hand, states outside [A-B, A+B]
GAP_BOUND_ENERGIES = (0.08312822669291234, 0.09077754749935606)
