"""Regenerate the shipped direction tables under src/swfkit/data/.

tdesign24: the 24-point spherical 7-design, found as a single orbit of the
chiral octahedral rotation group (the orbit is a design once the two
invariant harmonics of degree 4 and 6 vanish at the seed point).
lebedev50: the degree-11 Lebedev rule, built from its octahedral generators.

Run with ``python scripts/derive_grids.py``; the checksums printed at the end
go into ``swfkit.geometry.LAYOUT_SHA256``.
"""

import hashlib
import itertools
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50
DATA = Path(__file__).resolve().parents[1] / "src" / "swfkit" / "data"


def rotation_group():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = [[0] * 3 for _ in range(3)]
            for i, p in enumerate(perm):
                m[i][p] = signs[i]
            if mp.det(mp.matrix(m)) > 0:
                mats.append(m)
    return mats


def orbit(p, group):
    return [[sum(m[i][j] * p[j] for j in range(3)) for i in range(3)] for m in group]


def tdesign24():
    group = rotation_group()

    def seed(t, f):
        return [mp.cos(f) * mp.cos(t), mp.sin(f) * mp.cos(t), mp.sin(t)]

    def residual(t, f):
        pts = orbit(seed(t, f), group)
        return [sum(mp.legendre(n, q[2]) for q in pts) for n in (4, 6)]

    t, f = mp.findroot(residual, (mp.mpf("-1.0476"), mp.mpf("2.5786")), tol=1e-45)
    return orbit(seed(t, f), group)


def lebedev50():
    pts = []
    for i in range(3):
        for s in (1, -1):
            v = [mp.mpf(0)] * 3
            v[i] = mp.mpf(s)
            pts.append(v)
    r2 = 1 / mp.sqrt(2)
    for i in range(3):
        j, k = [a for a in range(3) if a != i]
        for s1, s2 in itertools.product((1, -1), repeat=2):
            v = [mp.mpf(0)] * 3
            v[j], v[k] = s1 * r2, s2 * r2
            pts.append(v)
    r3 = 1 / mp.sqrt(3)
    for s in itertools.product((1, -1), repeat=3):
        pts.append([c * r3 for c in s])
    lo, hi = 1 / mp.sqrt(11), 3 / mp.sqrt(11)
    for i in range(3):
        for s in itertools.product((1, -1), repeat=3):
            v = [lo, lo, lo]
            v[i] = hi
            pts.append([c * sv for c, sv in zip(v, s)])
    return pts


def write(name, pts, header):
    lines = [f"# {line}" for line in header] + ["# azimuth_deg elevation_deg"]
    for x, y, z in pts:
        az = mp.degrees(mp.atan2(y, x))
        el = mp.degrees(mp.asin(z))
        lines.append(f"{mp.nstr(az, 17, min_fixed=-1, max_fixed=4)} {mp.nstr(el, 17, min_fixed=-1, max_fixed=4)}")
    path = DATA / f"{name}.txt"
    path.write_text("\n".join(lines) + "\n")
    print(name, hashlib.sha256(path.read_bytes()).hexdigest())


if __name__ == "__main__":
    octa = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
    write("octahedron", [[mp.mpf(c) for c in v] for v in octa], ["regular octahedron, 6 vertices on the coordinate axes"])
    write("tdesign24", tdesign24(), ["24-point spherical t-design (degree 7, chiral octahedral orbit)"])
    write("lebedev50", lebedev50(), ["50-point Lebedev grid (degree 11); generator order a1, a2, a3, b1"])
