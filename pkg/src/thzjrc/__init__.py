"""Multi-subband quasi-perfect sequences for joint radar sensing and data
transfer at terahertz carriers: waveform construction, echo channel, radar
and communication receivers, and a seeded experiment harness."""

__version__ = "0.1.0"
