"""Compiled numerical kernels shared by the public modules.

Everything here is the single source of truth for the arithmetic: the public
wrappers in :mod:`vehicle`, :mod:`uncertainty` and :mod:`cost` call these same
functions (batch size 1 where needed) so that scalar APIs and batched planner
paths produce bit-identical numbers.

All kernels are ``nogil`` and single-threaded; determinism does not depend on
thread count or call order.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True, fastmath=False)


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------

@njit(**_JIT)
def k_step(x, y, th, v, d, dt, wb):
    """One forward-Euler step of the kinematic bicycle (rear-axle frame)."""
    nx = x + v * np.cos(th) * dt
    ny = y + v * np.sin(th) * dt
    nth = th + (v / wb) * np.tan(d) * dt
    return nx, ny, nth


@njit(**_JIT)
def k_jacobian(th, v, dt, out):
    """State Jacobian A = df/dx of k_step, written into out (3,3)."""
    out[0, 0] = 1.0
    out[0, 1] = 0.0
    out[0, 2] = -v * np.sin(th) * dt
    out[1, 0] = 0.0
    out[1, 1] = 1.0
    out[1, 2] = v * np.cos(th) * dt
    out[2, 0] = 0.0
    out[2, 1] = 0.0
    out[2, 2] = 1.0


@njit(**_JIT)
def k_apsa(a, s, q, out):
    """out = A S A^T + Q, symmetrized. Fixed summation order."""
    # tmp = A S
    tmp = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += a[i, k] * s[k, j]
            tmp[i, j] = acc
    # out = tmp A^T + Q, then symmetrize
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += tmp[i, k] * a[j, k]
            out[i, j] = acc + q[i, j]
    for i in range(3):
        for j in range(i + 1, 3):
            m = 0.5 * (out[i, j] + out[j, i])
            out[i, j] = m
            out[j, i] = m


@njit(**_JIT)
def k_clamp(v, d, vmin, vmax, dmax):
    if v < vmin:
        v = vmin
    elif v > vmax:
        v = vmax
    if d < -dmax:
        d = -dmax
    elif d > dmax:
        d = dmax
    return v, d


@njit(**_JIT)
def k_rollout_batch(x0, seqs, dt, wb, out):
    """Mean rollouts. seqs (B,T,2) -> out (B,T+1,3). Controls are not clamped."""
    b_n, t_n = seqs.shape[0], seqs.shape[1]
    for b in range(b_n):
        x, y, th = x0[0], x0[1], x0[2]
        out[b, 0, 0] = x
        out[b, 0, 1] = y
        out[b, 0, 2] = th
        for t in range(t_n):
            x, y, th = k_step(x, y, th, seqs[b, t, 0], seqs[b, t, 1], dt, wb)
            out[b, t + 1, 0] = x
            out[b, t + 1, 1] = y
            out[b, t + 1, 2] = th


@njit(**_JIT)
def k_logdet3_reg(s, eps):
    """log det(S + eps I) via cofactor expansion; <=0 determinant -> nan."""
    a00 = s[0, 0] + eps
    a01 = s[0, 1]
    a02 = s[0, 2]
    a11 = s[1, 1] + eps
    a12 = s[1, 2]
    a22 = s[2, 2] + eps
    det = (a00 * (a11 * a22 - a12 * a12)
           - a01 * (a01 * a22 - a12 * a02)
           + a02 * (a01 * a12 - a11 * a02))
    if det <= 0.0:
        return np.nan
    return np.log(det)


@njit(**_JIT)
def k_build_one(x0, sigma0, ctrl, dt, wb, q, eps, mean, cov, ld):
    """Propagate mean and covariance for one control sequence.

    mean (T+1,3), cov (T+1,3,3), ld (T+1) are output buffers; ld stores
    log det(cov_t + eps I) for the Hellinger kernels.
    """
    t_n = ctrl.shape[0]
    mean[0, 0] = x0[0]
    mean[0, 1] = x0[1]
    mean[0, 2] = x0[2]
    for i in range(3):
        for j in range(3):
            cov[0, i, j] = sigma0[i, j]
    ld[0] = k_logdet3_reg(cov[0], eps)
    a = np.empty((3, 3))
    for t in range(t_n):
        x, y, th = mean[t, 0], mean[t, 1], mean[t, 2]
        v, d = ctrl[t, 0], ctrl[t, 1]
        k_jacobian(th, v, dt, a)
        k_apsa(a, cov[t], q, cov[t + 1])
        nx, ny, nth = k_step(x, y, th, v, d, dt, wb)
        mean[t + 1, 0] = nx
        mean[t + 1, 1] = ny
        mean[t + 1, 2] = nth
        ld[t + 1] = k_logdet3_reg(cov[t + 1], eps)


@njit(**_JIT)
def k_build_batch(x0, sigma0, seqs, dt, wb, q, eps, means, covs, lds):
    for b in range(seqs.shape[0]):
        k_build_one(x0, sigma0, seqs[b], dt, wb, q, eps, means[b], covs[b], lds[b])


# ---------------------------------------------------------------------------
# Hellinger separation
# ---------------------------------------------------------------------------

@njit(**_JIT)
def k_logbc_block(ma, sa, lda, mb, sb, ldb, eps):
    """log Bhattacharyya coefficient of two 3-D Gaussian blocks.

    Covariances are regularized with eps*I (lda/ldb are the matching
    regularized log-determinants). Clipped at 0 so H^2 stays in [0,1].
    """
    a00 = 0.5 * (sa[0, 0] + sb[0, 0]) + eps
    a01 = 0.5 * (sa[0, 1] + sb[0, 1])
    a02 = 0.5 * (sa[0, 2] + sb[0, 2])
    a11 = 0.5 * (sa[1, 1] + sb[1, 1]) + eps
    a12 = 0.5 * (sa[1, 2] + sb[1, 2])
    a22 = 0.5 * (sa[2, 2] + sb[2, 2]) + eps
    c00 = a11 * a22 - a12 * a12
    c01 = a02 * a12 - a01 * a22
    c02 = a01 * a12 - a02 * a11
    c11 = a00 * a22 - a02 * a02
    c12 = a01 * a02 - a00 * a12
    c22 = a00 * a11 - a01 * a01
    det = a00 * c00 + a01 * c01 + a02 * c02
    if det <= 0.0:
        return np.nan
    d0 = ma[0] - mb[0]
    d1 = ma[1] - mb[1]
    d2 = ma[2] - mb[2]
    quad = (d0 * (c00 * d0 + c01 * d1 + c02 * d2)
            + d1 * (c01 * d0 + c11 * d1 + c12 * d2)
            + d2 * (c02 * d0 + c12 * d1 + c22 * d2)) / det
    logbc = 0.25 * lda + 0.25 * ldb - 0.5 * np.log(det) - 0.125 * quad
    if logbc > 0.0:
        logbc = 0.0
    return logbc


@njit(**_JIT)
def k_h2_traj(ma, sa, lda, mb, sb, ldb, eps):
    """Squared Hellinger distance between two block-diagonal trajectory
    distributions, computed in log space. Block t=0 is shared and skipped.

    Each block term is <= 0, so the running sum only decreases; once it
    falls below -37, 1 - exp(sum) rounds to exactly 1.0 in float64 and the
    walk short-circuits with the identical result.
    """
    t_n = ma.shape[0]
    acc = 0.0
    for t in range(1, t_n):
        acc += k_logbc_block(ma[t], sa[t], lda[t], mb[t], sb[t], ldb[t], eps)
        if acc < -37.0:
            return 1.0
    return 1.0 - np.exp(acc)


@njit(**_JIT)
def k_score_one(cm, cc, cld, means, covs, lds, skip, eps):
    """Separation score of one candidate against all trajectories j != skip."""
    n = means.shape[0]
    acc = 0.0
    for j in range(n):
        if j == skip:
            continue
        acc += k_h2_traj(cm, cc, cld, means[j], covs[j], lds[j], eps)
    return acc


@njit(**_JIT)
def k_mean_pairwise_h2(means, covs, lds, eps):
    n = means.shape[0]
    acc = 0.0
    cnt = 0
    for i in range(n):
        for j in range(i + 1, n):
            acc += k_h2_traj(means[i], covs[i], lds[i],
                             means[j], covs[j], lds[j], eps)
            cnt += 1
    if cnt == 0:
        return 0.0
    return acc / cnt


@njit(**_JIT)
def k_separate(ctrls, means, covs, lds, noise, factor, x0, sigma0,
               dt, wb, q, eps, vmin, vmax, dmax, trace):
    """Gauss-Seidel separation sweeps (in-place).

    ctrls (N,T,2), means (N,T+1,3), covs (N,T+1,3,3), lds (N,T+1) hold the
    current trajectory set; index 0 is the anchor and is never refined.
    noise (K,N-1,M,T,2) holds pre-drawn standard normals keyed upstream by
    (sweep, trajectory); row m is candidate m's draw, shaped here by
    ``factor`` (2x2 with factor @ factor.T = Sigma_u). trace (K,N-1,3)
    records (incumbent score, selected score, selected index) per refinement.

    Returns 0 on success, 1 on numeric degeneracy.
    """
    k_n, nm1, m_n, t_n = noise.shape[0], noise.shape[1], noise.shape[2], noise.shape[3]
    cand_ctrl = np.empty((t_n, 2))
    cand_mean = np.empty((t_n + 1, 3))
    cand_cov = np.empty((t_n + 1, 3, 3))
    cand_ld = np.empty(t_n + 1)
    best_ctrl = np.empty((t_n, 2))
    best_mean = np.empty((t_n + 1, 3))
    best_cov = np.empty((t_n + 1, 3, 3))
    best_ld = np.empty(t_n + 1)
    for k in range(k_n):
        for i in range(1, nm1 + 1):
            incumbent = k_score_one(means[i], covs[i], lds[i],
                                    means, covs, lds, i, eps)
            if np.isnan(incumbent):
                return 1
            best = incumbent
            best_m = 0
            for m in range(m_n):
                for t in range(t_n):
                    z0 = noise[k, i - 1, m, t, 0]
                    z1 = noise[k, i - 1, m, t, 1]
                    ev = z0 * factor[0, 0] + z1 * factor[0, 1]
                    ed = z0 * factor[1, 0] + z1 * factor[1, 1]
                    cv, cd = k_clamp(ctrls[i, t, 0] + ev, ctrls[i, t, 1] + ed,
                                     vmin, vmax, dmax)
                    cand_ctrl[t, 0] = cv
                    cand_ctrl[t, 1] = cd
                k_build_one(x0, sigma0, cand_ctrl, dt, wb, q, eps,
                            cand_mean, cand_cov, cand_ld)
                score = k_score_one(cand_mean, cand_cov, cand_ld,
                                    means, covs, lds, i, eps)
                if np.isnan(score):
                    return 1
                if score > best:
                    best = score
                    best_m = m + 1
                    best_ctrl[:] = cand_ctrl
                    best_mean[:] = cand_mean
                    best_cov[:] = cand_cov
                    best_ld[:] = cand_ld
            if best_m > 0:
                ctrls[i] = best_ctrl
                means[i] = best_mean
                covs[i] = best_cov
                lds[i] = best_ld
            trace[k, i - 1, 0] = incumbent
            trace[k, i - 1, 1] = best
            trace[k, i - 1, 2] = best_m
    return 0


# ---------------------------------------------------------------------------
# costmap sampling and trajectory cost
# ---------------------------------------------------------------------------

@njit(**_JIT)
def k_footprint_disc(grid, ox, oy, res, offs, x, y):
    """Max footprint cell cost, normalized to [0,1]; -1.0 means collided.

    The disc is sampled at the cells whose centers fall inside it, anchored
    at the cell containing (x, y). Leaving the map counts as a collision.
    """
    ny, nx = grid.shape
    ix = int(np.floor((x - ox) / res))
    iy = int(np.floor((y - oy) / res))
    worst = 0
    for p in range(offs.shape[0]):
        jx = ix + offs[p, 0]
        jy = iy + offs[p, 1]
        if jx < 0 or jx >= nx or jy < 0 or jy >= ny:
            return -1.0
        c = grid[jy, jx]
        if c == 255:
            return -1.0
        if c > worst:
            worst = c
    return worst / 255.0


@njit(**_JIT)
def k_traj_cost(traj, ctrl, grid, ox, oy, res, offs,
                gx, gy, tol, lu, lo, ld, ccoll):
    """Unified trajectory cost: collision freeze + goal truncation.

    Once a state collides, every stage from it onward (terminal included)
    contributes lo*ccoll + ld*frozen_dist where frozen_dist is the
    distance-to-goal of the first collided state. A collision-free state
    within tol of the goal truncates the sum and contributes only the
    terminal state cost.
    """
    t_n = ctrl.shape[0]
    collided = False
    fdist = 0.0
    total = 0.0
    for t in range(t_n):
        x = traj[t, 0]
        y = traj[t, 1]
        dx = gx - x
        dy = gy - y
        dist = np.sqrt(dx * dx + dy * dy)
        cobs = 0.0
        if not collided:
            cobs = k_footprint_disc(grid, ox, oy, res, offs, x, y)
            if cobs < 0.0:
                collided = True
                fdist = dist
            elif dist <= tol:
                return total + lo * cobs + ld * dist
        v = ctrl[t, 0]
        d = ctrl[t, 1]
        total += lu * (v * v + d * d)
        if collided:
            total += lo * ccoll + ld * fdist
        else:
            total += lo * cobs + ld * dist
    x = traj[t_n, 0]
    y = traj[t_n, 1]
    dx = gx - x
    dy = gy - y
    dist = np.sqrt(dx * dx + dy * dy)
    if not collided:
        cobs = k_footprint_disc(grid, ox, oy, res, offs, x, y)
        if cobs < 0.0:
            collided = True
            fdist = dist
        else:
            return total + lo * cobs + ld * dist
    return total + lo * ccoll + ld * fdist


@njit(**_JIT)
def k_traj_cost_batch(trajs, ctrls, grid, ox, oy, res, offs,
                      gx, gy, tol, lu, lo, ld, ccoll, out):
    for b in range(trajs.shape[0]):
        out[b] = k_traj_cost(trajs[b], ctrls[b], grid, ox, oy, res, offs,
                             gx, gy, tol, lu, lo, ld, ccoll)


@njit(**_JIT)
def k_sample_costs(x0, samples, dt, wb, vmin, vmax, dmax,
                   grid, ox, oy, res, offs, gx, gy, tol,
                   lu, lo, ld, ccoll, out):
    """Clamp, roll out and cost a batch of raw control samples (L,T,2)."""
    l_n, t_n = samples.shape[0], samples.shape[1]
    ctrl = np.empty((t_n, 2))
    traj = np.empty((t_n + 1, 3))
    for s in range(l_n):
        for t in range(t_n):
            v, d = k_clamp(samples[s, t, 0], samples[s, t, 1], vmin, vmax, dmax)
            ctrl[t, 0] = v
            ctrl[t, 1] = d
        x, y, th = x0[0], x0[1], x0[2]
        traj[0, 0] = x
        traj[0, 1] = y
        traj[0, 2] = th
        for t in range(t_n):
            x, y, th = k_step(x, y, th, ctrl[t, 0], ctrl[t, 1], dt, wb)
            traj[t + 1, 0] = x
            traj[t + 1, 1] = y
            traj[t + 1, 2] = th
        out[s] = k_traj_cost(traj, ctrl, grid, ox, oy, res, offs,
                             gx, gy, tol, lu, lo, ld, ccoll)


@njit(**_JIT)
def k_first_reach(traj, grid, ox, oy, res, offs, gx, gy, tol):
    """Index of the first goal-reaching state if the prefix up to it is
    collision-free, else -1."""
    for t in range(traj.shape[0]):
        x = traj[t, 0]
        y = traj[t, 1]
        if k_footprint_disc(grid, ox, oy, res, offs, x, y) < 0.0:
            return -1
        dx = gx - x
        dy = gy - y
        if np.sqrt(dx * dx + dy * dy) <= tol:
            return t
    return -1
