# cython: language_level=3
"""Compiled inner loops. Must stay semantically identical to _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor

cnp.import_array()


cdef Py_ssize_t _find(Py_ssize_t[:] parent, Py_ssize_t a) noexcept nogil:
    cdef Py_ssize_t root = a, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[a] != root:
        nxt = parent[a]
        parent[a] = root
        a = nxt
    return root


def component_labels(Py_ssize_t n, const cnp.int64_t[:] ii, const cnp.int64_t[:] jj):
    cdef Py_ssize_t[:] parent = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t k, a, b
    cdef Py_ssize_t m = ii.shape[0]
    with nogil:
        for k in range(m):
            a = _find(parent, ii[k])
            b = _find(parent, jj[k])
            if a != b:
                if a < b:
                    parent[b] = a
                else:
                    parent[a] = b
    labels = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] lab = labels
    remap = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[:] rm = remap
    cdef cnp.int64_t nxt = 0
    for k in range(n):
        a = _find(parent, k)
        if rm[a] < 0:
            rm[a] = nxt
            nxt += 1
        lab[k] = rm[a]
    return labels


def leader_labels(const double[:, :] xy, double radius, const cnp.int64_t[:] indptr, const cnp.int64_t[:] nbr):
    cdef Py_ssize_t n = xy.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    leader = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[:] lab = labels
    cdef unsigned char[:] lead = leader
    cdef Py_ssize_t p, k, q, best
    cdef double d, bestd, dx, dy
    cdef cnp.int64_t nlead = 0
    cdef double r2 = radius * radius
    with nogil:
        for p in range(n):
            best = -1
            bestd = 0.0
            for k in range(indptr[p], indptr[p + 1]):
                q = nbr[k]
                if q >= p or not lead[q]:
                    continue
                dx = xy[p, 0] - xy[q, 0]
                dy = xy[p, 1] - xy[q, 1]
                d = dx * dx + dy * dy
                if d < r2 and (best < 0 or d < bestd or (d == bestd and q < best)):
                    best = q
                    bestd = d
            if best >= 0:
                lab[p] = lab[best]
            else:
                lab[p] = nlead
                lead[p] = 1
                nlead += 1
    return labels


cdef inline Py_ssize_t _cell_index(double x, double y, double z, const double[:] origin, double cell,
                                   Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nz,
                                   Py_ssize_t* ix, Py_ssize_t* iy, Py_ssize_t* iz) noexcept nogil:
    ix[0] = <Py_ssize_t>floor((x - origin[0]) / cell)
    iy[0] = <Py_ssize_t>floor((y - origin[1]) / cell)
    iz[0] = <Py_ssize_t>floor((z - origin[2]) / cell)
    return 0


def visible_any(const double[:, :] points, const double[:, :] samples,
                const cnp.int64_t[:] indptr, const cnp.int64_t[:] cand,
                const double[:, :] occ_points, const cnp.int64_t[:] occ_ids,
                const cnp.int64_t[:] cell_start, const double[:] origin, double cell,
                Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nz, double r_occ):
    """For each point, True if any candidate sample sees it unoccluded.

    Candidates are pre-filtered for range and aperture and ordered; the
    first unoccluded one wins. ``occ_points`` are sorted by cell and
    ``occ_ids`` holds their original point index.
    """
    cdef Py_ssize_t n = points.shape[0]
    covered = np.zeros(n, dtype=np.bool_)
    cdef cnp.npy_bool[:] cov = covered
    cdef Py_ssize_t p, k, s, step, nsteps, ix, iy, iz, cx, cy, cz, c, j
    cdef double ux, uy, uz, L, t, mx, my, mz, qx, qy, qz, proj, ex, ey, ez, rng2, lim, dist2
    cdef double r2 = r_occ * r_occ
    cdef bint occluded
    with nogil:
        for p in range(n):
            for k in range(indptr[p], indptr[p + 1]):
                s = cand[k]
                ux = points[p, 0] - samples[s, 0]
                uy = points[p, 1] - samples[s, 1]
                uz = points[p, 2] - samples[s, 2]
                L = sqrt(ux * ux + uy * uy + uz * uz)
                lim = L - r_occ
                occluded = False
                if L > 0.0 and lim > 0.0:
                    ux = ux / L
                    uy = uy / L
                    uz = uz / L
                    nsteps = <Py_ssize_t>floor(L / r_occ) + 1
                    for step in range(nsteps + 1):
                        t = step * r_occ
                        if t > L:
                            t = L
                        mx = samples[s, 0] + t * ux
                        my = samples[s, 1] + t * uy
                        mz = samples[s, 2] + t * uz
                        _cell_index(mx, my, mz, origin, cell, nx, ny, nz, &ix, &iy, &iz)
                        for cx in range(ix - 1, ix + 2):
                            if cx < 0 or cx >= nx:
                                continue
                            for cy in range(iy - 1, iy + 2):
                                if cy < 0 or cy >= ny:
                                    continue
                                for cz in range(iz - 1, iz + 2):
                                    if cz < 0 or cz >= nz:
                                        continue
                                    c = (cx * ny + cy) * nz + cz
                                    for j in range(cell_start[c], cell_start[c + 1]):
                                        if occ_ids[j] == p:
                                            continue
                                        qx = occ_points[j, 0] - samples[s, 0]
                                        qy = occ_points[j, 1] - samples[s, 1]
                                        qz = occ_points[j, 2] - samples[s, 2]
                                        rng2 = qx * qx + qy * qy + qz * qz
                                        if rng2 >= lim * lim:
                                            continue
                                        proj = qx * ux + qy * uy + qz * uz
                                        if proj < 0.0:
                                            proj = 0.0
                                        elif proj > L:
                                            proj = L
                                        ex = qx - proj * ux
                                        ey = qy - proj * uy
                                        ez = qz - proj * uz
                                        dist2 = ex * ex + ey * ey + ez * ez
                                        if dist2 < r2:
                                            occluded = True
                                            break
                                    if occluded:
                                        break
                                if occluded:
                                    break
                            if occluded:
                                break
                        if occluded:
                            break
                if not occluded:
                    cov[p] = True
                    break
    return covered
