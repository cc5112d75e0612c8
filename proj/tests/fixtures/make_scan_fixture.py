#!/usr/bin/env python3
# Copyright 2026 The cptkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the three-scan fixture used by the scan-pipeline tests.

Scan 2 carries a dark stretch (spectral jump) below 2 kc/s. Values are
rounded so the files are stable across platforms.
"""

import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent / "scans"
N = 41
SPAN_HZ = 20e9
F0 = 484.1e12
OFFSETS_HZ = [0.0, 0.35e9, -0.2e9]
DIP_CENTER_HZ = 1.1e9


def counts_at(f, rng):
    x = f - F0 - DIP_CENTER_HZ
    clean = 30000.0 * (1.0 - 0.3 * np.exp(-0.5 * (x / 3e9) ** 2))
    return np.round(clean + rng.normal(0.0, 150.0, size=np.shape(f)), 1)


def main():
    rng = np.random.default_rng(20240917)
    OUT.mkdir(parents=True, exist_ok=True)
    log_t, log_f = [], []
    for k, offset in enumerate(OFFSETS_HZ):
        t0 = 20.0 * k
        t = t0 + 0.25 * np.arange(N)
        volts = np.round(np.linspace(0.0, 4.0, N), 3)
        # wavemeter ticks every 0.2 s, slightly ahead of and past the scan
        lt = np.round(np.arange(t0 - 0.4, t0 + 10.4 + 1e-9, 0.2), 3)
        lf = np.round(F0 - SPAN_HZ + offset + 2 * SPAN_HZ * (lt - t0) / 10.0, 0)
        log_t.extend(lt)
        log_f.extend(lf)
        freq = F0 - SPAN_HZ + offset + 2 * SPAN_HZ * (t - t0) / 10.0
        counts = counts_at(freq, rng)
        if k == 1:
            counts[12:19] = np.round(rng.uniform(150.0, 400.0, size=7), 1)
        with open(OUT / f"scan_{k}.csv", "w") as fh:
            fh.write("# direction=up, drive_unit=V\n")
            fh.write("timestamp_s,drive,counts_per_s\n")
            for ti, vi, ci in zip(t, volts, counts):
                fh.write(f"{ti:.2f},{vi:.3f},{ci:.1f}\n")
    with open(OUT / "frequency_log.csv", "w") as fh:
        fh.write("timestamp_s,frequency_hz\n")
        for ti, fi in zip(log_t, log_f):
            fh.write(f"{ti:.3f},{fi:.0f}\n")


if __name__ == "__main__":
    main()
