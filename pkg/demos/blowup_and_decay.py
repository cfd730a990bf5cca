"""Logarithmic blow-up probes and the decay of the sphere's Fourier transform.

The four probes grow without bound as x -> 0 while their bounded variants
stay flat. The envelope of |sigma^(xi)| decays like xi^(-(n-1)/2).
"""

from sphavg.experiments import BlowupProbe, run_blowup, run_decay
from sphavg.spherical import build_grid

KS = list(range(6, 19))

if __name__ == "__main__":
    for probe in (BlowupProbe("E"), BlowupProbe("P"), BlowupProbe("G"), BlowupProbe("BE", 0.5)):
        rep = run_blowup(probe, KS)
        vals = [v for _, _, v, _ in rep.rows]
        print(rep.summary_line())
        print("    T at x = 2^-k:", " ".join(f"{v:.3f}" for v in vals))
        if probe.tag != "BE":
            flat = run_blowup(BlowupProbe(probe.tag, bounded=True), KS)
            print("    bounded variant:", flat.summary_line())

    print(run_decay(2, 200, build_grid(2, 4096)).summary_line())
    print(run_decay(3, 60, build_grid(3, 512, polar_resolution=512), samples_per_unit=5).summary_line())
