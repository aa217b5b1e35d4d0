"""Regenerates the test fixtures with numpy, independently of the Rust code.

    python3 generate.py

poisson_10khz.pgun
    Homogeneous Poisson stream, 10 kHz for 10 s, one channel, every record
    tagged as background. Its 1 ms bin counts have variance equal to the
    mean, so the noise ratio is 1.

saturation_terrylene.csv
    Detected rate against pulse energy for a molecule with E_s = 0.05 pJ,
    13 ps pulses, 10 ns lifetime, R0 = 10200 counts/s and a linear
    background of 5.5 counts/(s pJ), each point counted for 1 s.
"""

import struct
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def poisson_stream(rate_hz=10_000.0, duration_s=10.0, seed=20240611):
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate_hz * duration_s)
    # conditional on the count, arrival times are iid uniform
    t = np.sort(rng.uniform(0.0, duration_s, n))
    ps = np.floor(t * 1e12).astype(np.uint64)
    header = b"PGUN" + struct.pack("<HHII", 1, 1, 1, 0)
    rec = np.zeros(n, dtype=[("t", "<u8"), ("origin", "u1"), ("channel", "u1"), ("pad", "V6")])
    rec["t"] = ps
    rec["origin"] = 1
    (HERE / "poisson_10khz.pgun").write_bytes(header + rec.tobytes())

    counts = np.bincount((ps // 10**9).astype(np.int64), minlength=int(duration_s * 1000))
    ratio = counts.std(ddof=1) / np.sqrt(counts.mean())
    print(f"poisson_10khz.pgun: {n} records, 1 ms noise ratio {ratio:.4f}")


def excited_population(e_p, e_s, tau_p, tau_r):
    x = e_p / e_s
    return x / (1 + x) * -np.expm1(-(tau_p / tau_r) * (1 + x))


def saturation_curve(seed=5):
    rng = np.random.default_rng(seed)
    r0, e_s, alpha = 10_200.0, 0.05, 5.5
    tau_p, tau_r = 13e-12, 1e-8
    e_p = np.geomspace(0.005, 300.0, 24)
    mean = r0 * excited_population(e_p, e_s, tau_p, tau_r) + alpha * e_p
    counts = rng.poisson(mean * 1.0)
    with open(HERE / "saturation_terrylene.csv", "w") as f:
        f.write("E_p_pJ,rate_cps\n")
        for e, c in zip(e_p, counts):
            f.write(f"{e:.6g},{c:d}\n")
    rho200 = excited_population(200.0, e_s, tau_p, tau_r)
    print(f"saturation_terrylene.csv: {len(e_p)} points, rho(200 pJ) = {rho200:.4f}")


if __name__ == "__main__":
    poisson_stream()
    saturation_curve()
