"""Per-document processing time along a stationary synthetic stream.

    python3 scripts/latency.py --n-events 3000 --blocks 10
"""
import argparse

import numpy as np
from scipy import stats

from mpdhp.experiments import engine_config_for, run_engine
from mpdhp.synth import SynthSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-events", type=int, default=3000)
    ap.add_argument("--spectral-radius", type=float, default=0.8)
    ap.add_argument("--n-samples", type=int, default=2000)
    ap.add_argument("--n-particles", type=int, default=8)
    ap.add_argument("--blocks", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = SynthSpec(seed=args.seed, spectral_radius=args.spectral_radius, n_events=args.n_events)
    data = generate(spec)
    cfg = engine_config_for(spec, n_samples=args.n_samples, n_particles=args.n_particles)
    lat = run_engine(data.documents, cfg).latencies * 1e3
    for i, block in enumerate(np.array_split(lat, args.blocks)):
        print(f"block {i:2d}: median {np.median(block):7.2f} ms  p90 {np.percentile(block, 90):7.2f} ms")
    fit = stats.linregress(np.arange(lat.size), lat)
    print(f"overall median {np.median(lat):.2f} ms; slope {fit.slope:.2e} ms/doc (p={fit.pvalue:.2f})")


if __name__ == "__main__":
    main()
