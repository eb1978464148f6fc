"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same inputs, same outputs. Used when the extension is not built or when
``CCPP_PURE_PYTHON=1``.
"""

import numpy as np
from scipy.spatial import cKDTree


def component_labels(n, ii, jj):
    parent = list(range(n))

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for a, b in zip(ii.tolist(), jj.tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb
    labels = np.empty(n, dtype=np.int64)
    remap = {}
    for k in range(n):
        r = find(k)
        if r not in remap:
            remap[r] = len(remap)
        labels[k] = remap[r]
    return labels


def leader_labels(xy, radius, indptr, nbr):
    n = len(xy)
    labels = np.full(n, -1, dtype=np.int64)
    leader = np.zeros(n, dtype=bool)
    r2 = radius * radius
    nlead = 0
    for p in range(n):
        best, bestd = -1, 0.0
        px, py = xy[p]
        for q in nbr[indptr[p]:indptr[p + 1]].tolist():
            if q >= p or not leader[q]:
                continue
            dx = px - xy[q, 0]
            dy = py - xy[q, 1]
            d = dx * dx + dy * dy
            if d < r2 and (best < 0 or d < bestd or (d == bestd and q < best)):
                best, bestd = q, d
        if best >= 0:
            labels[p] = labels[best]
        else:
            labels[p] = nlead
            leader[p] = True
            nlead += 1
    return labels


def visible_any(points, samples, indptr, cand, occ_points, occ_ids,
                cell_start, origin, cell, nx, ny, nz, r_occ):
    # grid arguments are ignored here; a KD-tree answers the same question
    order = np.argsort(occ_ids)
    model = occ_points[order]
    tree = cKDTree(model)
    covered = np.zeros(len(points), dtype=bool)
    r2 = r_occ * r_occ
    for p in range(len(points)):
        for s in cand[indptr[p]:indptr[p + 1]].tolist():
            c = samples[s]
            u = points[p] - c
            L = float(np.sqrt(u @ u))
            lim = L - r_occ
            if L > 0.0 and lim > 0.0:
                u = u / L
                near = tree.query_ball_point(c + 0.5 * L * u, 0.5 * L + 1.5 * r_occ)
                near = np.array([q for q in near if q != p], dtype=np.int64)
                if len(near):
                    qv = model[near] - c
                    rng2 = np.einsum("ij,ij->i", qv, qv)
                    qv = qv[rng2 < lim * lim]
                    proj = np.clip(qv @ u, 0.0, L)
                    e = qv - proj[:, None] * u
                    if np.any(np.einsum("ij,ij->i", e, e) < r2):
                        continue
            covered[p] = True
            break
    return covered
