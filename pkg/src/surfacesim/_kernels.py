"""Compiled hot loops: window simulation, candidate edges, matching.

Everything here is an array-based, iteration-only reformulation of the
pure-Python reference implementations in sim.py, decoder.py and
matching.py.  numba is optional: with SURFACESIM_NO_NUMBA set (or numba
missing) the callers stay on the reference paths, and equivalence tests
compare the two routes.

The matching kernel mirrors matching._max_weight_matching: a primal-dual
blossom with vertex ids 0..n-1 and blossom ids n..2n-1.  Recursive steps
of the reference (leaf iteration, blossom expansion, augmentation) are
flattened onto explicit stacks; blossom cycles live in fixed (n x n)
child/endpoint tables.
"""

from __future__ import annotations

import os

import numpy as np

HAVE_NUMBA = False
if not os.environ.get("SURFACESIM_NO_NUMBA"):
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        pass

if not HAVE_NUMBA:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def window_kernel(rounds, n_cells,
                  gate_ctl, gate_tgt, step_ofs,
                  cnot_round, cnot_gate, cnot_kind,
                  idle_round, idle_cell, idle_kind, idle_late,
                  meas_round, meas_stab,
                  z_cells, x_cells,
                  pauli2, pauli1,
                  x_frame, z_frame, z_signs, x_signs):
    """Advance one window: `rounds` noisy cycles plus a noiseless closure.

    Noise events arrive pre-sampled and sorted by round (CNOT errors also
    by gate index, which is step order).  Signs arrays have rounds+2
    columns; column 0 is the zero baseline.
    """
    n_z = z_cells.shape[0]
    n_x = x_cells.shape[0]
    prev_z = np.zeros(n_z, dtype=np.uint8)
    prev_x = np.zeros(n_x, dtype=np.uint8)
    ci = 0
    ii = 0
    mi = 0
    n_cnot_err = cnot_round.shape[0]
    n_idle_err = idle_round.shape[0]
    n_meas_err = meas_round.shape[0]

    for t in range(1, rounds + 2):
        for step in range(4):
            for g in range(step_ofs[step], step_ofs[step + 1]):
                c = gate_ctl[g]
                tg = gate_tgt[g]
                x_frame[tg] ^= x_frame[c]
                z_frame[c] ^= z_frame[tg]
            next_ofs = step_ofs[step + 1]
            while (ci < n_cnot_err and cnot_round[ci] == t
                   and cnot_gate[ci] < next_ofs):
                g = cnot_gate[ci]
                kind = cnot_kind[ci]
                c = gate_ctl[g]
                tg = gate_tgt[g]
                x_frame[c] ^= pauli2[kind, 0]
                z_frame[c] ^= pauli2[kind, 1]
                x_frame[tg] ^= pauli2[kind, 2]
                z_frame[tg] ^= pauli2[kind, 3]
                ci += 1

        # Early data idles (step 5).
        while (ii < n_idle_err and idle_round[ii] == t
               and idle_late[ii] == 0):
            cell = idle_cell[ii]
            kind = idle_kind[ii]
            x_frame[cell] ^= pauli1[kind, 0]
            z_frame[cell] ^= pauli1[kind, 1]
            ii += 1

        # Measurement flips persist in the frame (wrong projection).
        while mi < n_meas_err and meas_round[mi] == t:
            s = meas_stab[mi]
            if s < n_z:
                x_frame[z_cells[s]] ^= 1
            else:
                z_frame[x_cells[s - n_z]] ^= 1
            mi += 1

        for a in range(n_z):
            r = x_frame[z_cells[a]]
            z_signs[a, t] = r ^ prev_z[a]
            prev_z[a] = r
            z_frame[z_cells[a]] = 0
        for a in range(n_x):
            r = z_frame[x_cells[a]]
            x_signs[a, t] = r ^ prev_x[a]
            prev_x[a] = r
            x_frame[x_cells[a]] = 0

        # Late data idles (step 6, after readout).
        while ii < n_idle_err and idle_round[ii] == t:
            cell = idle_cell[ii]
            kind = idle_kind[ii]
            x_frame[cell] ^= pauli1[kind, 0]
            z_frame[cell] ^= pauli1[kind, 1]
            ii += 1


@njit(cache=True, fastmath=True)
def candidate_edges(stab_idx, ts, wtab, bvals, reach, sub_a, sub_b, prune_eps):
    """Pruned real-real edges among events sorted by time.

    Events are (stab_idx[i], ts[i]); wtab[a, b, dt] holds pair weights up
    to dt = reach (inf beyond pruning range).  Returns (eu, ev, ew, count).
    """
    k = stab_idx.shape[0]
    cap = max(16, k * 24)
    eu = np.empty(cap, dtype=np.int32)
    ev = np.empty(cap, dtype=np.int32)
    ew = np.empty(cap, dtype=np.float64)
    cnt = 0
    for i in range(k):
        ai = stab_idx[i]
        ti = ts[i]
        for j in range(i + 1, k):
            dt = ts[j] - ti
            if dt > reach:
                break
            aj = stab_idx[j]
            if abs(sub_a[ai] - sub_a[aj]) > reach or \
               abs(sub_b[ai] - sub_b[aj]) > reach:
                continue
            w = wtab[ai, aj, dt]
            if w < bvals[ai] + bvals[aj] - prune_eps:
                if cnt >= cap:
                    cap *= 2
                    eu2 = np.empty(cap, dtype=np.int32)
                    ev2 = np.empty(cap, dtype=np.int32)
                    ew2 = np.empty(cap, dtype=np.float64)
                    eu2[:cnt] = eu[:cnt]
                    ev2[:cnt] = ev[:cnt]
                    ew2[:cnt] = ew[:cnt]
                    eu, ev, ew = eu2, ev2, ew2
                eu[cnt] = i
                ev[cnt] = j
                ew[cnt] = w
                cnt += 1
    return eu, ev, ew, cnt


@njit(cache=True)
def apply_corrections(size, pair_u_cell, pair_v_cell, bd_cell, bd_dir, corr):
    """Toggle data qubits: staircases between matched stabilizers plus
    straight exits for boundary matches (dir: 0 left, 1 right, 2 top,
    3 bottom)."""
    for idx in range(pair_u_cell.shape[0]):
        i1 = pair_u_cell[idx] // size
        j1 = pair_u_cell[idx] % size
        i2 = pair_v_cell[idx] // size
        j2 = pair_v_cell[idx] % size
        lo = i1 if i1 < i2 else i2
        hi = i1 if i1 > i2 else i2
        for i in range(lo, hi, 2):
            corr[(i + 1) * size + j1] ^= 1
        lo = j1 if j1 < j2 else j2
        hi = j1 if j1 > j2 else j2
        for j in range(lo, hi, 2):
            corr[i2 * size + j + 1] ^= 1
    for idx in range(bd_cell.shape[0]):
        i = bd_cell[idx] // size
        j = bd_cell[idx] % size
        d = bd_dir[idx]
        if d == 0:
            for jj in range(j - 1, -1, -2):
                corr[i * size + jj] ^= 1
        elif d == 1:
            for jj in range(j + 1, size, 2):
                corr[i * size + jj] ^= 1
        elif d == 2:
            for ii in range(i - 1, -1, -2):
                corr[ii * size + j] ^= 1
        else:
            for ii in range(i + 1, size, 2):
                corr[ii * size + j] ^= 1


@njit(cache=True)
def union_find_components(k, eu, ev, cnt):
    """Component label per node under the candidate edges."""
    parent = np.arange(k, dtype=np.int32)
    for e in range(cnt):
        a = eu[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ev[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            parent[b] = a
    for v in range(k):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            nxt = parent[v]
            parent[v] = root
            v = nxt
    return parent


@njit(cache=True)
def union_find_components_alive(k, eu, ev, cnt, alive):
    """Component label per alive node; edges with dead endpoints ignored."""
    parent = np.arange(k, dtype=np.int32)
    for e in range(cnt):
        if alive[eu[e]] == 0 or alive[ev[e]] == 0:
            continue
        a = eu[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ev[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            parent[b] = a
    for v in range(k):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            nxt = parent[v]
            parent[v] = root
            v = nxt
    return parent


@njit(cache=True, fastmath=True)
def component_dp(wmat, bcost):
    """Exact subset DP: min pair weights + boundary costs of the unpaired.

    Returns (dp, choice); choice[mask] is the partner picked for the
    lowest set bit of mask, or -1 for a boundary match.
    """
    k = wmat.shape[0]
    full = 1 << k
    dp = np.empty(full, dtype=np.float64)
    choice = np.empty(full, dtype=np.int32)
    dp[0] = 0.0
    choice[0] = -2
    for mask in range(1, full):
        low = mask & (-mask)
        a = 0
        while (low >> a) & 1 == 0:
            a += 1
        rest = mask ^ (1 << a)
        best = dp[rest] + bcost[a]
        pick = -1
        m = rest
        while m:
            lowb = m & (-m)
            b = 0
            while (lowb >> b) & 1 == 0:
                b += 1
            m ^= lowb
            w = wmat[a, b]
            if w < np.inf:
                cand = dp[rest ^ lowb] + w
                if cand < best:
                    best = cand
                    pick = b
        dp[mask] = best
        choice[mask] = pick
    return dp, choice


# ---------------------------------------------------------------------------
# Blossom matching kernel.
#
# Ids: vertices 0..n-1, nontrivial blossoms n..2n-1 (row b-n in the child
# tables).  mate[] stores remote edge endpoints p (edge k has endpoints
# 2k and 2k+1, endpoint[p] is the vertex there), matching the reference.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _bl_leaves(b, n, childs, childs_len, buf, stack):
    """Collect the vertex leaves of blossom b into buf; returns count."""
    if b < n:
        buf[0] = b
        return 1
    cnt = 0
    sp = 0
    stack[sp] = b
    sp += 1
    while sp > 0:
        sp -= 1
        cur = stack[sp]
        if cur < n:
            buf[cnt] = cur
            cnt += 1
        else:
            row = cur - n
            for idx in range(childs_len[row]):
                stack[sp] = childs[row, idx]
                sp += 1
    return cnt


@njit(cache=True)
def _bl_assign_label(w, t, p, n, endpoint, mate, label, labelend, inblossom,
                     blossombase, bestedge, queue, qlen, childs, childs_len,
                     leafbuf, leafstack):
    """Label vertex w's blossom; S-labels enqueue leaves, T-labels recurse
    to the base's mate (iteratively)."""
    while True:
        b = inblossom[w]
        label[w] = t
        label[b] = t
        labelend[w] = p
        labelend[b] = p
        bestedge[w] = -1
        bestedge[b] = -1
        if t == 1:
            cnt = _bl_leaves(b, n, childs, childs_len, leafbuf, leafstack)
            for idx in range(cnt):
                queue[qlen] = leafbuf[idx]
                qlen += 1
            return qlen
        base = blossombase[b]
        w = endpoint[mate[base]]
        p = mate[base] ^ 1
        t = 1


@njit(cache=True)
def _bl_scan_blossom(v, w, n, endpoint, mate, label, labelend, inblossom,
                     blossombase, pathbuf):
    """Find the common ancestor base of v and w in the alternating tree."""
    plen = 0
    base = -1
    while v != -1 or w != -1:
        b = inblossom[v]
        if label[b] & 4:
            base = blossombase[b]
            break
        pathbuf[plen] = b
        plen += 1
        label[b] = 5
        if labelend[b] == -1:
            v = -1
        else:
            v = endpoint[labelend[b]]
            b = inblossom[v]
            v = endpoint[labelend[b]]
        if w != -1:
            tmp = v
            v = w
            w = tmp
    for idx in range(plen):
        label[pathbuf[idx]] = 1
    return base


@njit(cache=True)
def blossom_match(n, eu, ev, ew, maxcardinality, eps):
    """Maximum-weight matching (optionally maximum-cardinality first).

    Returns mate_vertex[v] = partner vertex or -1.  Mirrors the reference
    implementation step for step; see matching._max_weight_matching.
    """
    mate_out = np.full(n, -1, dtype=np.int32)
    if eu.shape[0] == 0 or n == 0:
        return mate_out
    childs = np.empty((n, n + 1), dtype=np.int32)
    endps = np.empty((n, n + 1), dtype=np.int32)
    bbe = np.empty((n, 2 * n), dtype=np.int32)
    queue = np.empty(n * n + 8 * n + 16, dtype=np.int32)
    _bl_run(n, eu, ev, ew, maxcardinality, eps, childs, endps, bbe, queue,
            mate_out)
    return mate_out


@njit(cache=True, fastmath=True)
def _bl_run(n, eu, ev, ew, maxcardinality, eps, childs, endps, bbe, queue,
            mate_out):
    """Blossom core; scratch tables are caller-provided (logical size n)."""
    nedge = eu.shape[0]

    endpoint = np.empty(2 * nedge, dtype=np.int32)
    for k in range(nedge):
        endpoint[2 * k] = eu[k]
        endpoint[2 * k + 1] = ev[k]

    deg = np.zeros(n, dtype=np.int32)
    for k in range(nedge):
        deg[eu[k]] += 1
        deg[ev[k]] += 1
    nb_ofs = np.zeros(n + 1, dtype=np.int32)
    for v in range(n):
        nb_ofs[v + 1] = nb_ofs[v] + deg[v]
    fill = nb_ofs[:n].copy()
    nb_lst = np.empty(2 * nedge, dtype=np.int32)
    for k in range(nedge):
        nb_lst[fill[eu[k]]] = 2 * k + 1
        fill[eu[k]] += 1
        nb_lst[fill[ev[k]]] = 2 * k
        fill[ev[k]] += 1

    maxweight = 0.0
    for k in range(nedge):
        if ew[k] > maxweight:
            maxweight = ew[k]

    mate = np.full(n, -1, dtype=np.int32)
    label = np.zeros(2 * n, dtype=np.int8)
    labelend = np.full(2 * n, -1, dtype=np.int32)
    inblossom = np.arange(n, dtype=np.int32)
    blossomparent = np.full(2 * n, -1, dtype=np.int32)
    blossombase = np.empty(2 * n, dtype=np.int32)
    for v in range(n):
        blossombase[v] = v
    blossombase[n:] = -1
    childs_len = np.zeros(n, dtype=np.int32)
    bestedge = np.full(2 * n, -1, dtype=np.int32)
    bbe_len = np.full(n, -1, dtype=np.int32)  # -1: no list
    dualvar = np.zeros(2 * n, dtype=np.float64)
    dualvar[:n] = maxweight
    allowedge = np.zeros(nedge, dtype=np.uint8)
    unused = np.empty(n, dtype=np.int32)
    for i in range(n):
        unused[i] = 2 * n - 1 - i  # pop() yields n, n+1, ...
    unused_top = n

    leafbuf = np.empty(n, dtype=np.int32)
    leafstack = np.empty(2 * n, dtype=np.int32)
    pathbuf = np.empty(2 * n, dtype=np.int32)
    pathb = np.empty(2 * n, dtype=np.int32)
    pathe = np.empty(2 * n, dtype=np.int32)
    bestedgeto = np.empty(2 * n, dtype=np.int32)
    augstack = np.empty(8 * n + 16, dtype=np.int32)
    expstack = np.empty(2 * n, dtype=np.int32)

    for _stage in range(n):
        for i in range(2 * n):
            label[i] = 0
            bestedge[i] = -1
        bbe_len[:] = -1
        for k in range(nedge):
            allowedge[k] = 0
        qlen = 0
        for v in range(n):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                qlen = _bl_assign_label(
                    v, 1, -1, n, endpoint, mate, label, labelend, inblossom,
                    blossombase, bestedge, queue, qlen, childs, childs_len,
                    leafbuf, leafstack)
        augmented = False

        while True:
            while qlen > 0 and not augmented:
                qlen -= 1
                v = queue[qlen]
                for pi in range(nb_ofs[v], nb_ofs[v + 1]):
                    p = nb_lst[pi]
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = 0.0
                    if not allowedge[k]:
                        kslack = dualvar[eu[k]] + dualvar[ev[k]] - 2.0 * ew[k]
                        if kslack <= eps:
                            allowedge[k] = 1
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            qlen = _bl_assign_label(
                                w, 2, p ^ 1, n, endpoint, mate, label,
                                labelend, inblossom, blossombase, bestedge,
                                queue, qlen, childs, childs_len, leafbuf,
                                leafstack)
                        elif label[inblossom[w]] == 1:
                            base = _bl_scan_blossom(
                                v, w, n, endpoint, mate, label, labelend,
                                inblossom, blossombase, pathbuf)
                            if base >= 0:
                                # --- add_blossom(base, k) ---
                                bb = inblossom[base]
                                bv = inblossom[eu[k]]
                                bw = inblossom[ev[k]]
                                unused_top -= 1
                                b = unused[unused_top]
                                row = b - n
                                blossombase[b] = base
                                blossomparent[b] = -1
                                blossomparent[bb] = b
                                plen = 0
                                vv = eu[k]
                                while bv != bb:
                                    blossomparent[bv] = b
                                    pathb[plen] = bv
                                    pathe[plen] = labelend[bv]
                                    plen += 1
                                    vv = endpoint[labelend[bv]]
                                    bv = inblossom[vv]
                                # reverse collected path, then base first
                                childs[row, 0] = bb
                                for idx in range(plen):
                                    childs[row, idx + 1] = pathb[plen - 1 - idx]
                                    endps[row, idx] = pathe[plen - 1 - idx]
                                endps[row, plen] = 2 * k
                                clen = plen + 1
                                ww = ev[k]
                                while bw != bb:
                                    blossomparent[bw] = b
                                    childs[row, clen] = bw
                                    endps[row, clen] = labelend[bw] ^ 1
                                    clen += 1
                                    ww = endpoint[labelend[bw]]
                                    bw = inblossom[ww]
                                childs_len[row] = clen
                                label[b] = 1
                                labelend[b] = labelend[bb]
                                dualvar[b] = 0.0
                                cnt = _bl_leaves(b, n, childs, childs_len,
                                                 leafbuf, leafstack)
                                for idx in range(cnt):
                                    leaf = leafbuf[idx]
                                    if label[inblossom[leaf]] == 2:
                                        queue[qlen] = leaf
                                        qlen += 1
                                    inblossom[leaf] = b
                                # merge best-edge lists
                                for idx in range(2 * n):
                                    bestedgeto[idx] = -1
                                for ci in range(clen):
                                    bvc = childs[row, ci]
                                    if bvc < n or bbe_len[bvc - n] < 0:
                                        cnt2 = _bl_leaves(
                                            bvc, n, childs, childs_len,
                                            leafbuf, leafstack)
                                        for li in range(cnt2):
                                            leaf = leafbuf[li]
                                            for pj in range(nb_ofs[leaf],
                                                            nb_ofs[leaf + 1]):
                                                kk = nb_lst[pj] // 2
                                                jv = eu[kk]
                                                if inblossom[jv] == b:
                                                    jv = ev[kk]
                                                bj = inblossom[jv]
                                                if (bj != b and label[bj] == 1):
                                                    old = bestedgeto[bj]
                                                    if old == -1 or (
                                                        dualvar[eu[kk]] + dualvar[ev[kk]] - 2.0 * ew[kk]
                                                        < dualvar[eu[old]] + dualvar[ev[old]] - 2.0 * ew[old]):
                                                        bestedgeto[bj] = kk
                                    else:
                                        brow = bvc - n
                                        for li in range(bbe_len[brow]):
                                            kk = bbe[brow, li]
                                            jv = eu[kk]
                                            if inblossom[jv] == b:
                                                jv = ev[kk]
                                            bj = inblossom[jv]
                                            if (bj != b and label[bj] == 1):
                                                old = bestedgeto[bj]
                                                if old == -1 or (
                                                    dualvar[eu[kk]] + dualvar[ev[kk]] - 2.0 * ew[kk]
                                                    < dualvar[eu[old]] + dualvar[ev[old]] - 2.0 * ew[old]):
                                                    bestedgeto[bj] = kk
                                    if bvc >= n:
                                        bbe_len[bvc - n] = -1
                                    bestedge[bvc] = -1
                                nbl = 0
                                for idx in range(2 * n):
                                    if bestedgeto[idx] != -1:
                                        bbe[row, nbl] = bestedgeto[idx]
                                        nbl += 1
                                bbe_len[row] = nbl
                                bestedge[b] = -1
                                for li in range(nbl):
                                    kk = bbe[row, li]
                                    if bestedge[b] == -1 or (
                                        dualvar[eu[kk]] + dualvar[ev[kk]] - 2.0 * ew[kk]
                                        < dualvar[eu[bestedge[b]]] + dualvar[ev[bestedge[b]]] - 2.0 * ew[bestedge[b]]):
                                        bestedge[b] = kk
                            else:
                                # --- augment_matching(k) ---
                                _bl_augment_matching(
                                    k, n, eu, ev, endpoint, mate, label,
                                    labelend, inblossom, blossombase,
                                    blossomparent, childs, childs_len, endps,
                                    augstack)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < (
                                dualvar[eu[bestedge[b]]] + dualvar[ev[bestedge[b]]]
                                - 2.0 * ew[bestedge[b]]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < (
                                dualvar[eu[bestedge[w]]] + dualvar[ev[bestedge[w]]]
                                - 2.0 * ew[bestedge[w]]):
                            bestedge[w] = k

            if augmented:
                break

            deltatype = -1
            delta = 0.0
            deltaedge = -1
            deltablossom = -1
            if not maxcardinality:
                deltatype = 1
                delta = dualvar[0]
                for v in range(1, n):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
                if delta < 0.0:
                    delta = 0.0
            for v in range(n):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    kk = bestedge[v]
                    d = dualvar[eu[kk]] + dualvar[ev[kk]] - 2.0 * ew[kk]
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = kk
            for b in range(2 * n):
                if blossomparent[b] == -1 and label[b] == 1 and \
                        bestedge[b] != -1:
                    kk = bestedge[b]
                    d = (dualvar[eu[kk]] + dualvar[ev[kk]] - 2.0 * ew[kk]) / 2.0
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = kk
            for b in range(n, 2 * n):
                if blossombase[b] >= 0 and blossomparent[b] == -1 and \
                        label[b] == 2:
                    if deltatype == -1 or dualvar[b] < delta:
                        delta = dualvar[b]
                        deltatype = 4
                        deltablossom = b
            if deltatype == -1:
                deltatype = 1
                delta = dualvar[0]
                for v in range(1, n):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
                if delta < 0.0:
                    delta = 0.0

            for v in range(n):
                lbl = label[inblossom[v]]
                if lbl == 1:
                    dualvar[v] -= delta
                elif lbl == 2:
                    dualvar[v] += delta
            for b in range(n, 2 * n):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = 1
                i = eu[deltaedge]
                if label[inblossom[i]] == 0:
                    i = ev[deltaedge]
                queue[qlen] = i
                qlen += 1
            elif deltatype == 3:
                allowedge[deltaedge] = 1
                queue[qlen] = eu[deltaedge]
                qlen += 1
            else:
                qlen, unused_top = _bl_expand_blossom(
                    deltablossom, False, n, endpoint, mate, label, labelend,
                    inblossom, blossombase, blossomparent, childs, childs_len,
                    endps, bestedge, bbe_len, dualvar, allowedge, queue, qlen,
                    unused, unused_top, leafbuf, leafstack, expstack, eps)

        if not augmented:
            break

        for b in range(n, 2 * n):
            if (blossomparent[b] == -1 and blossombase[b] >= 0 and
                    label[b] == 1 and dualvar[b] <= eps):
                qlen, unused_top = _bl_expand_blossom(
                    b, True, n, endpoint, mate, label, labelend, inblossom,
                    blossombase, blossomparent, childs, childs_len, endps,
                    bestedge, bbe_len, dualvar, allowedge, queue, qlen,
                    unused, unused_top, leafbuf, leafstack, expstack, eps)

    for v in range(n):
        if mate[v] >= 0:
            mate_out[v] = endpoint[mate[v]]


@njit(cache=True)
def _bl_augment_blossom(b, v, n, endpoint, mate, blossomparent, childs,
                        childs_len, endps, blossombase, jobs):
    """Iterative version of the reference augment_blossom(b, v)."""
    sp = 0
    jobs[sp] = b
    jobs[sp + 1] = v
    sp += 2
    while sp > 0:
        sp -= 2
        b = jobs[sp]
        v = jobs[sp + 1]
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= n:
            jobs[sp] = t
            jobs[sp + 1] = v
            sp += 2
        row = b - n
        clen = childs_len[row]
        i = 0
        for idx in range(clen):
            if childs[row, idx] == t:
                i = idx
                break
        j = i
        if i & 1:
            j -= clen
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            tt = childs[row, j % clen]
            p = endps[row, (j - endptrick) % clen] ^ endptrick
            if tt >= n:
                jobs[sp] = tt
                jobs[sp + 1] = endpoint[p]
                sp += 2
            j += jstep
            tt = childs[row, j % clen]
            if tt >= n:
                jobs[sp] = tt
                jobs[sp + 1] = endpoint[p ^ 1]
                sp += 2
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        # rotate childs/endps so that sub-blossom t (index i) comes first
        if i > 0:
            tmpc = np.empty(clen, dtype=np.int32)
            tmpe = np.empty(clen, dtype=np.int32)
            for idx in range(clen):
                tmpc[idx] = childs[row, (i + idx) % clen]
                tmpe[idx] = endps[row, (i + idx) % clen]
            for idx in range(clen):
                childs[row, idx] = tmpc[idx]
                endps[row, idx] = tmpe[idx]
        blossombase[b] = v


@njit(cache=True)
def _bl_augment_matching(k, n, eu, ev, endpoint, mate, label, labelend,
                         inblossom, blossombase, blossomparent, childs,
                         childs_len, endps, augstack):
    for side in range(2):
        if side == 0:
            s = eu[k]
            p = 2 * k + 1
        else:
            s = ev[k]
            p = 2 * k
        while True:
            bs = inblossom[s]
            if bs >= n:
                _bl_augment_blossom(bs, s, n, endpoint, mate, blossomparent,
                                    childs, childs_len, endps, blossombase,
                                    augstack)
            mate[s] = p
            if labelend[bs] == -1:
                break
            t = endpoint[labelend[bs]]
            bt = inblossom[t]
            s = endpoint[labelend[bt]]
            j = endpoint[labelend[bt] ^ 1]
            if inblossom[j] >= n:
                _bl_augment_blossom(inblossom[j], j, n, endpoint, mate,
                                    blossomparent, childs, childs_len, endps,
                                    blossombase, augstack)
            mate[j] = labelend[bt]
            p = labelend[bt] ^ 1


@njit(cache=True)
def _bl_expand_blossom(b, endstage, n, endpoint, mate, label, labelend,
                       inblossom, blossombase, blossomparent, childs,
                       childs_len, endps, bestedge, bbe_len, dualvar,
                       allowedge, queue, qlen, unused, unused_top, leafbuf,
                       leafstack, expstack, eps):
    """Iterative expand_blossom; returns (new qlen, new unused_top)."""
    sp = 0
    expstack[sp] = b
    sp += 1
    ut = unused_top
    while sp > 0:
        sp -= 1
        b = expstack[sp]
        row = b - n
        clen = childs_len[row]
        for ci in range(clen):
            s = childs[row, ci]
            blossomparent[s] = -1
            if s < n:
                inblossom[s] = s
            elif endstage and dualvar[s] <= eps:
                expstack[sp] = s
                sp += 1
            else:
                cnt = _bl_leaves(s, n, childs, childs_len, leafbuf, leafstack)
                for li in range(cnt):
                    inblossom[leafbuf[li]] = s
        if (not endstage) and label[b] == 2:
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = 0
            for ci in range(clen):
                if childs[row, ci] == entrychild:
                    j = ci
                    break
            if j & 1:
                j -= clen
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[endps[row, (j - endptrick) % clen] ^ endptrick ^ 1]] = 0
                qlen = _bl_assign_label(
                    endpoint[p ^ 1], 2, p, n, endpoint, mate, label, labelend,
                    inblossom, blossombase, bestedge, queue, qlen, childs,
                    childs_len, leafbuf, leafstack)
                allowedge[endps[row, (j - endptrick) % clen] // 2] = 1
                j += jstep
                p = endps[row, (j - endptrick) % clen] ^ endptrick
                allowedge[p // 2] = 1
                j += jstep
            bv = childs[row, j % clen]
            label[endpoint[p ^ 1]] = 2
            label[bv] = 2
            labelend[endpoint[p ^ 1]] = p
            labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while childs[row, j % clen] != entrychild:
                bv = childs[row, j % clen]
                if label[bv] == 1:
                    j += jstep
                    continue
                cnt = _bl_leaves(bv, n, childs, childs_len, leafbuf, leafstack)
                leaf = -1
                for li in range(cnt):
                    if label[leafbuf[li]] != 0:
                        leaf = leafbuf[li]
                        break
                if leaf >= 0:
                    label[leaf] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    qlen = _bl_assign_label(
                        leaf, 2, labelend[leaf], n, endpoint, mate, label,
                        labelend, inblossom, blossombase, bestedge, queue,
                        qlen, childs, childs_len, leafbuf, leafstack)
                j += jstep
        label[b] = -1
        labelend[b] = -1
        childs_len[row] = 0
        blossombase[b] = -1
        bbe_len[row] = -1
        bestedge[b] = -1
        unused[ut] = b
        ut += 1
    return qlen, ut


@njit(cache=True)
def solve_components(stabs, ts, wtab, bvals, reach,
                     sub_a, sub_b, prune_eps, eps, dp_max):
    """Full per-window matching: candidate edges, components, exact solves.

    Events are (stabs[i], ts[i]) sorted by time.  Returns event-index
    arrays (pair_u, pair_v, bd_idx) with their counts (n_pairs, n_bd).
    """
    k = stabs.shape[0]
    pair_u = np.empty(k, dtype=np.int32)
    pair_v = np.empty(k, dtype=np.int32)
    bd_idx = np.empty(k, dtype=np.int32)
    n_pairs = 0
    n_bd = 0
    if k == 0:
        return pair_u, pair_v, bd_idx, n_pairs, n_bd
    if k == 1:
        bd_idx[0] = 0
        return pair_u, pair_v, bd_idx, n_pairs, 1

    eu, ev, ew, cnt = candidate_edges(stabs, ts, wtab, bvals, reach,
                                      sub_a, sub_b, prune_eps)

    alive = np.ones(k, dtype=np.uint8)
    labels = union_find_components_alive(k, eu, ev, cnt, alive)

    # Counting sort of nodes and edges by component root (alive only).
    csize = np.zeros(k + 1, dtype=np.int32)
    for v in range(k):
        if alive[v]:
            csize[labels[v] + 1] += 1
    for r in range(k):
        csize[r + 1] += csize[r]
    node_of = np.empty(k, dtype=np.int32)
    fill = csize[:k].copy()
    for v in range(k):
        if alive[v]:
            node_of[fill[labels[v]]] = v
            fill[labels[v]] += 1
    ecount = np.zeros(k + 1, dtype=np.int32)
    for e in range(cnt):
        if alive[eu[e]] and alive[ev[e]]:
            ecount[labels[eu[e]] + 1] += 1
    for r in range(k):
        ecount[r + 1] += ecount[r]
    edge_of = np.empty(max(cnt, 1), dtype=np.int32)
    efill = ecount[:k].copy()
    for e in range(cnt):
        if alive[eu[e]] and alive[ev[e]]:
            edge_of[efill[labels[eu[e]]]] = e
            efill[labels[eu[e]]] += 1

    # Scratch for the blossom solver, sized for the largest component.
    kmax = 0
    for r in range(k):
        sz = csize[r + 1] - csize[r]
        if sz > kmax:
            kmax = sz
    childs = np.empty((kmax + 1, kmax + 2), dtype=np.int32)
    endps = np.empty((kmax + 1, kmax + 2), dtype=np.int32)
    bbe = np.empty((kmax + 1, 2 * kmax + 2), dtype=np.int32)
    queue = np.empty(kmax * kmax + 8 * kmax + 16, dtype=np.int32)
    posbuf = np.full(k, -1, dtype=np.int32)

    for r in range(k):
        lo, hi = csize[r], csize[r + 1]
        ksub = hi - lo
        if ksub == 0:
            continue
        if ksub == 1:
            bd_idx[n_bd] = node_of[lo]
            n_bd += 1
            continue
        elo, ehi = ecount[r], ecount[r + 1]
        if ksub == 2:
            u = node_of[lo]
            v = node_of[lo + 1]
            wbest = np.inf
            for ei in range(elo, ehi):
                w = ew[edge_of[ei]]
                if w < wbest:
                    wbest = w
            if wbest <= bvals[stabs[u]] + bvals[stabs[v]]:
                pair_u[n_pairs] = u
                pair_v[n_pairs] = v
                n_pairs += 1
            else:
                bd_idx[n_bd] = u
                bd_idx[n_bd + 1] = v
                n_bd += 2
            continue
        for i in range(ksub):
            posbuf[node_of[lo + i]] = i
        if ksub <= dp_max:
            wmat = np.full((ksub, ksub), np.inf)
            for ei in range(elo, ehi):
                e = edge_of[ei]
                a = posbuf[eu[e]]
                b = posbuf[ev[e]]
                if ew[e] < wmat[a, b]:
                    wmat[a, b] = ew[e]
                    wmat[b, a] = ew[e]
            bcost = np.empty(ksub, dtype=np.float64)
            for i in range(ksub):
                bcost[i] = bvals[stabs[node_of[lo + i]]]
            dp, choice = component_dp(wmat, bcost)
            mask = (1 << ksub) - 1
            while mask:
                a = 0
                while (mask >> a) & 1 == 0:
                    a += 1
                pick = choice[mask]
                if pick < 0:
                    bd_idx[n_bd] = node_of[lo + a]
                    n_bd += 1
                    mask ^= 1 << a
                else:
                    pair_u[n_pairs] = node_of[lo + a]
                    pair_v[n_pairs] = node_of[lo + pick]
                    n_pairs += 1
                    mask ^= (1 << a) | (1 << pick)
        else:
            m = ehi - elo
            reu = np.empty(m, dtype=np.int32)
            rev = np.empty(m, dtype=np.int32)
            gains = np.empty(m, dtype=np.float64)
            for i in range(m):
                e = edge_of[elo + i]
                a = posbuf[eu[e]]
                b = posbuf[ev[e]]
                reu[i] = a
                rev[i] = b
                gains[i] = (bvals[stabs[node_of[lo + a]]]
                            + bvals[stabs[node_of[lo + b]]] - ew[e])
            mate = np.full(ksub, -1, dtype=np.int32)
            _bl_run(ksub, reu, rev, gains, False, eps,
                    childs, endps, bbe, queue, mate)
            for a in range(ksub):
                if mate[a] == -1:
                    bd_idx[n_bd] = node_of[lo + a]
                    n_bd += 1
                elif a < mate[a]:
                    pair_u[n_pairs] = node_of[lo + a]
                    pair_v[n_pairs] = node_of[lo + mate[a]]
                    n_pairs += 1
    return pair_u, pair_v, bd_idx, n_pairs, n_bd
