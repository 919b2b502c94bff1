"""Designing the sensing sequence.

Walks from a single Zadoff-Chu sequence to the ten-subband composite used by
the sensing scenarios, then looks at peak power and at what a Doppler shift
does to the correlation sidelobes for two choices of root index.

Run with ``python3 demos/sequence_design.py``.
"""

import numpy as np

from thzjrc.dsp import cyclic_correlate, papr_db
from thzjrc.radar import subband_sample
from thzjrc.waveforms import MsQpSpec, ZcParams, msqp_build, phase_rotation_search, zc_generate, zc_root_design

# %% A single ZC sequence has unit modulus and a perfect periodic autocorrelation.
L = 1007
p = zc_root_design(L)
b = zc_generate(ZcParams(L, p))
r = cyclic_correlate(b, b)
print(f"ZC length {L}, designed root {p}")
print(f"  |b| in [{np.abs(b).min():.12f}, {np.abs(b).max():.12f}]")
print(f"  peak {abs(r[0]):.1f}, largest off-peak {np.abs(r[1:]).max():.2e}")

# %% Ten of them side by side in frequency, with 100 empty guard bins each.
spec = MsQpSpec.uniform(10, L, guard_len=100)
x = msqp_build(spec)
r = np.abs(cyclic_correlate(x, x))
print(f"\ncomposite length N = {spec.total_len}")
print(f"  peak-to-largest-sidelobe {20 * np.log10(r[0] / r[1:].max()):.1f} dB")
print(f"  PAPR without rotation {papr_db(x):.2f} dB")

# %% Rotating whole subbands leaves the magnitude spectrum (and so the
# autocorrelation) alone but can flatten the envelope a lot.
phases = phase_rotation_search(spec)
x_rot = msqp_build(spec.with_phases(phases))
print(f"  PAPR with searched phases {papr_db(x_rot):.2f} dB, phases/pi = {np.round(np.array(phases) / np.pi, 2)}")
r_rot = np.abs(cyclic_correlate(x_rot, x_rot))
print(f"  autocorrelation unchanged: {np.allclose(r, r_rot)}")


# %% Doppler: rotate the echo by 0.4 cycles over one subband, look at each
# subband in its own sample grid and find where the strong sidelobes land.
def strong_sidelobes(root, vl=0.4, rel_db=-20):
    s = MsQpSpec.uniform(10, L, root=root, guard_len=100)
    tx = msqp_build(s)
    n = np.arange(s.total_len)
    rx = tx * np.exp(2j * np.pi * vl / s.total_len * n)
    worst = 0
    for got, ref in zip(subband_sample(rx, s), subband_sample(tx, s)):
        c = np.abs(cyclic_correlate(got[0], ref[0]))
        peak = int(np.argmax(c))
        strong = np.flatnonzero(c >= c[peak] * 10 ** (rel_db / 20))
        dist = np.minimum((strong - peak) % L, (peak - strong) % L)
        worst = max(worst, int(dist.max()))
    return worst


print("\nlargest cyclic distance of a sidelobe within 20 dB of the peak, v*L = 0.4:")
print(f"  designed root {p}: {strong_sidelobes(p)} bins")
print(f"  root 3:          {strong_sidelobes(3)} bins")
print("a detector that blanks +/-40 bins around each accepted peak absorbs the first, not the second")
