"""One pass through the radar receiver.

Two targets, a noisy impaired echo, the per-subband low-rate front end,
block correlation, the range-Doppler map, CFAR with target exclusion, and
the conversion of detected cells back to metres and metres per second.
"""

import numpy as np

from thzjrc.channel import ChannelConfig, ImpairmentConfig, Target, propagate_cpi
from thzjrc.radar import CfarConfig, cfar_floor, correlate_subblocks, match_targets, rdm, subband_receive, temp_detect
from thzjrc.waveforms import MsQpSpec, msqp_build

spec = MsQpSpec.uniform(10, 1007, guard_len=100)
x = msqp_build(spec)
Q = 128
targets = [Target(0.9, 12.0), Target(2.4, -7.5, gain=0.7)]
channel = ChannelConfig(
    carrier_hz=300e9,
    sample_period_s=1e-10,
    snr_db=-35.0,
    impairments=ImpairmentConfig.thz_default(),
    targets=targets,
)

# %% Echo of Q back-to-back transmissions, then each subband is isolated
# and resampled at its own rate before correlation.
echo = propagate_cpi(x, channel, Q, seed=2024)
blocks = subband_receive(echo, spec)
rd = rdm(correlate_subblocks(blocks, x), pad_factor=4, sample_period_s=1e-10, carrier_hz=300e9)
print(f"map: {rd.n_range} range bins x {rd.n_doppler} Doppler bins")
print(f"resolution {rd.range_resolution * 100:.2f} cm, {rd.velocity_resolution:.3f} m/s")

# %% CFAR floor from 32 training cells each side, 13 dB threshold, and
# +/-40 bins blanked around every accepted peak.
cfar = CfarConfig(threshold=10 ** 1.3, train_cells=32, guard_cells=4, temp_radius=40)
report = temp_detect(rd, cfar_floor(rd, cfar), cfar)
for d in report:
    print(f"  cell ({d.range_bin:5d}, {d.doppler_bin:3d})  {d.range_m:6.3f} m  {d.velocity_mps:+7.2f} m/s  "
          f"{10 * np.log10(d.power / d.floor):5.1f} dB over floor")

hits, false_alarms = match_targets(report, targets, rd)
print(f"targets found: {sorted(hits)} of {list(range(len(targets)))}, false alarms: {len(false_alarms)}")
for i, t in enumerate(targets):
    print(f"  truth {i}: {t.range_m:.3f} m, {t.velocity_mps:+.2f} m/s")
