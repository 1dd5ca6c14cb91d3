#!/usr/bin/env python3
"""Sample random triangles and report the spread of the local constraint singular values.

Useful for judging how distorted an element can get before the numerical
rank of the local constraint matrix becomes ambiguous.
"""

import argparse

import numpy as np

from trefftz_stokes.mesh import Mesh
from trefftz_stokes.stokes_dg import DGSpace
from trefftz_stokes.trefftz import RankError, assemble_local_W, local_kernel


def single_triangle(verts):
    h = max(np.linalg.norm(verts[i] - verts[j]) for i in range(3) for j in range(i))
    return Mesh(
        vertices=verts,
        elements=np.array([[0, 1, 2]]),
        interior_facets=np.zeros((0, 4), dtype=int),
        boundary_facets=np.array([[0, 0], [0, 1], [0, 2]]),
        h_per_element=np.array([h]),
    )


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.samples):
        verts = rng.uniform(-1, 1, size=(3, 2))
        d1, d2 = verts[1] - verts[0], verts[2] - verts[0]
        signed = d1[0] * d2[1] - d1[1] * d2[0]
        if signed < 0:
            verts = verts[[0, 2, 1]]
        mesh = single_triangle(verts)
        quality = abs(signed) / mesh.h_per_element[0] ** 2
        try:
            ker = local_kernel(assemble_local_W(DGSpace(mesh, args.k), 0))
            s = ker.singular_values
            rows.append((quality, s[ker.rank - 1] / s[0], ker.kernel_dim))
        except RankError:
            rows.append((quality, np.nan, -1))
    rows.sort()
    print(f"{'area/h^2':>9s} {'smin/smax':>10s} {'dim':>4s}")
    for q, ratio, dim in rows[:: max(1, len(rows) // 20)]:
        print(f"{q:9.4f} {ratio:10.2e} {dim:4d}")
    failures = sum(dim < 0 for _, _, dim in rows)
    print(f"{failures} of {len(rows)} samples had an ambiguous rank")


if __name__ == "__main__":
    main()
