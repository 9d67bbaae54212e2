"""Convert a SimpleFreeFieldHRIR SOFA file to per-direction WAVs plus a JSON manifest.

Needs h5py (``pip install h5py``). Usage:
    python scripts/sofa_to_manifest.py KU100_48K.sofa out_dir/
"""

import argparse

import h5py
import numpy as np

from swfkit.binaural import HrirSet, write_hrir_set
from swfkit.geometry import sph_to_cart


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("sofa")
    ap.add_argument("out_dir")
    ap.add_argument("--subtype", choices=("float32", "int24"), default="float32")
    args = ap.parse_args()

    with h5py.File(args.sofa, "r") as f:
        irs = np.asarray(f["Data.IR"], dtype=float)  # (M, 2, N)
        pos = np.asarray(f["SourcePosition"], dtype=float)  # (M, 3): azimuth, elevation, radius
        fs = int(np.asarray(f["Data.SamplingRate"]).ravel()[0])
        name = f.attrs.get("Title", b"sofa")
    name = name.decode() if isinstance(name, bytes) else str(name)
    h = HrirSet(fs, sph_to_cart(pos[:, 0], pos[:, 1]), irs, name=name, grid=f"{len(pos)} measured directions")
    manifest = write_hrir_set(h, args.out_dir, args.subtype)
    print(f"{len(h)} HRIRs at {fs} Hz -> {manifest} (coverage radius {h.coverage_radius():.2f} deg)")


if __name__ == "__main__":
    main()
