# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled paired-run kernel; the fast twin of ``_purepy.run_paired_core``.

The arithmetic and its ordering must stay in lockstep with the pure-Python
kernel: both use scalar libm calls and ascending-index sums, and the
extension is compiled with -ffp-contract=off, so the two backends produce
bit-identical trajectories on one machine.
"""

import numpy as np

from libc.math cimport exp, log, sqrt, pow, INFINITY
from libc.stdint cimport int64_t

BACKEND = "compiled"

cdef int ACTION_UP = 2


cdef inline double _log0(double x) nogil:
    if x > 0.0:
        return log(x)
    return -INFINITY


def run_paired_core(
    int num_steps,
    double[:, ::1] combination,
    double[:, :, ::1] lik,
    double[:, ::1] reward_pair,
    double[:, :, ::1] reward_action,
    double drift,
    double obs_noise,
    int halfwidth,
    int init_state,
    double sigma,
    double floor,
    double gamma,
    double rho_min,
    double rho_max,
    double guard,
    int consensus_rounds,
    int behavior_mode,
    double[:, :, ::1] chi,
    double[::1] beta,
    double[::1] beta_theta,
    double[::1] u_move,
    double[:, ::1] u_obs,
    double[:, ::1] u_act,
    int partial_true_beliefs,
    int64_t[::1] out_state_p, int64_t[::1] out_state_f,
    int64_t[:, ::1] out_actions_p, int64_t[:, ::1] out_actions_f,
    int64_t[:, ::1] out_hard_p,
    double[::1] out_reward_p, double[::1] out_reward_f,
    double[:, ::1] out_entropy_p,
    double[:, ::1] out_rho_est_p, double[:, ::1] out_rho_est_f,
    double[::1] out_rho_exact_p, double[::1] out_rho_exact_f,
    double[:, ::1] out_delta_p, double[:, ::1] out_delta_f,
    double[:, :, ::1] out_omega_p, double[:, :, ::1] out_omega_f,
    double[:, ::1] out_actor_gap,
    int64_t[::1] out_proj_p, int64_t[::1] out_proj_f,
):
    cdef int K = combination.shape[0]
    cdef int S = lik.shape[2]
    cdef int A = chi.shape[1]

    soft_buf = np.full((K, S), 1.0 / S)
    psi_buf = np.zeros((K, S))
    comb_buf = np.zeros((K, S))
    tilde_buf = np.zeros((K, S))
    om_p_buf = np.zeros((K, S))
    om_f_buf = np.zeros((K, S))
    th_p_buf = np.zeros((K, A, S))
    th_f_buf = np.zeros((K, A, S))
    g_p_buf = np.zeros((K, A))
    g_f_buf = np.zeros((K, A))
    dist_buf = np.zeros(A)
    scratch = np.zeros((8, K))
    mu_p_buf = np.zeros(K, dtype=np.int64)
    act_buf = np.zeros((2, K), dtype=np.int64)
    xi_buf = np.zeros(K, dtype=np.int64)
    eta_buf = np.zeros(K, dtype=np.int64)

    cdef double[:, ::1] soft = soft_buf
    cdef double[:, ::1] psi = psi_buf
    cdef double[:, ::1] comb = comb_buf
    cdef double[:, ::1] tilde = tilde_buf
    cdef double[:, ::1] om_p = om_p_buf
    cdef double[:, ::1] om_f = om_f_buf
    cdef double[:, :, ::1] th_p = th_p_buf
    cdef double[:, :, ::1] th_f = th_f_buf
    cdef double[:, ::1] g_p = g_p_buf
    cdef double[:, ::1] g_f = g_f_buf
    cdef double[::1] dist = dist_buf
    cdef double[::1] q_p = scratch[0]
    cdef double[::1] q_f = scratch[1]
    cdef double[::1] rho = scratch[2]
    cdef double[::1] f0 = scratch[3]
    cdef double[::1] f1 = scratch[4]
    cdef double[::1] rho_est = scratch[5]
    cdef double[::1] r_p = scratch[6]
    cdef double[::1] r_f = scratch[7]
    cdef int64_t[::1] mu_p = mu_p_buf
    cdef int64_t[::1] a_p = act_buf[0]
    cdef int64_t[::1] a_f = act_buf[1]
    cdef int64_t[::1] xi = xi_buf
    cdef int64_t[::1] eta_p = eta_buf

    cdef double lo_joint = pow(rho_min, <double>K)
    cdef double hi_joint = pow(rho_max, <double>K)
    cdef int sp = init_state
    cdef int sf = init_state

    cdef int n, k, s, l, a, t, feat, mu, eta, best, sp2, sf2, proj, d, swap_flag
    cdef double bp, bt, um, m, z, w, acc, r, prod, delta, nrm, scale, step, ent, cum, tmp
    cdef bint in_window, flip

    swap_flag = 0  # 0: soft in soft_buf, comb in comb_buf; 1: swapped
    cdef double[:, ::1] cur_soft = soft
    cdef double[:, ::1] cur_comb = comb

    for n in range(num_steps):
        bp = beta[n]
        bt = beta_theta[n]
        out_state_p[n] = sp
        out_state_f[n] = sf

        # --- actions from the behavior policy (shared draws) ---
        for k in range(K):
            feat = sp if partial_true_beliefs else <int>mu_p[k]
            if behavior_mode == 0:
                for a in range(A):
                    dist[a] = 1.0 / A
            else:
                m = chi[k, 0, feat]
                for a in range(1, A):
                    if chi[k, a, feat] > m:
                        m = chi[k, a, feat]
                z = 0.0
                for a in range(A):
                    w = exp(chi[k, a, feat] - m)
                    dist[a] = w
                    z += w
                for a in range(A):
                    dist[a] /= z
            cum = 0.0
            best = A - 1
            for a in range(A - 1):
                cum += dist[a]
                if u_act[n, k] < cum:
                    best = a
                    break
            a_p[k] = best
            q_p[k] = dist[best]

            if behavior_mode == 0:
                for a in range(A):
                    dist[a] = 1.0 / A
            else:
                m = chi[k, 0, sf]
                for a in range(1, A):
                    if chi[k, a, sf] > m:
                        m = chi[k, a, sf]
                z = 0.0
                for a in range(A):
                    w = exp(chi[k, a, sf] - m)
                    dist[a] = w
                    z += w
                for a in range(A):
                    dist[a] /= z
            cum = 0.0
            best = A - 1
            for a in range(A - 1):
                cum += dist[a]
                if u_act[n, k] < cum:
                    best = a
                    break
            a_f[k] = best
            q_f[k] = dist[best]
            out_actions_p[n, k] = a_p[k]
            out_actions_f[n, k] = a_f[k]
            out_hard_p[n, k] = mu_p[k]

        # --- environment transitions (shared move draw) ---
        um = u_move[n]
        sp2 = sp
        sf2 = sf
        if um < drift:
            sp2 = sp - 1 if a_p[sp] == ACTION_UP else sp + 1
            if sp2 < 0 or sp2 >= S:
                sp2 = sp
            sf2 = sf - 1 if a_f[sf] == ACTION_UP else sf + 1
            if sf2 < 0 or sf2 >= S:
                sf2 = sf
        acc = 0.0
        for k in range(K):
            r_p[k] = reward_pair[sp, sp2] + reward_action[k, sp, <int>a_p[k]]
            acc += r_p[k]
        out_reward_p[n] = acc / K
        acc = 0.0
        for k in range(K):
            r_f[k] = reward_pair[sf, sf2] + reward_action[k, sf, <int>a_f[k]]
            acc += r_f[k]
        out_reward_f[n] = acc / K

        # --- observations of the next state (partial arm) ---
        for k in range(K):
            d = sp2 - k
            if d < 0:
                d = -d
            in_window = d <= halfwidth
            flip = u_obs[n, k] < obs_noise
            xi[k] = 1 if in_window != flip else 0

        # --- one social-learning round: local update, combine, hard assign ---
        for k in range(K):
            m = -INFINITY
            for s in range(S):
                tmp = _log0(lik[k, xi[k], s]) + (1.0 - sigma) * _log0(cur_soft[k, s])
                psi[k, s] = tmp
                if tmp > m:
                    m = tmp
            z = 0.0
            for s in range(S):
                w = exp(psi[k, s] - m)
                psi[k, s] = w
                z += w
            for s in range(S):
                psi[k, s] /= z
            z = 0.0
            for s in range(S):
                if psi[k, s] < floor:
                    psi[k, s] = floor
                z += psi[k, s]
            for s in range(S):
                psi[k, s] /= z
        for k in range(K):
            for s in range(S):
                psi[k, s] = log(psi[k, s])
        for k in range(K):
            m = -INFINITY
            for s in range(S):
                acc = 0.0
                for l in range(K):
                    acc += combination[l, k] * psi[l, s]
                cur_comb[k, s] = acc
                if acc > m:
                    m = acc
            z = 0.0
            for s in range(S):
                w = exp(cur_comb[k, s] - m)
                cur_comb[k, s] = w
                z += w
            for s in range(S):
                cur_comb[k, s] /= z
            z = 0.0
            for s in range(S):
                if cur_comb[k, s] < floor:
                    cur_comb[k, s] = floor
                z += cur_comb[k, s]
            for s in range(S):
                cur_comb[k, s] /= z
            best = 0
            for s in range(1, S):
                if cur_comb[k, s] > cur_comb[k, best]:
                    best = s
            eta_p[k] = best
            ent = 0.0
            for s in range(S):
                ent -= cur_comb[k, s] * log(cur_comb[k, s])
            out_entropy_p[n, k] = ent
        if swap_flag == 0:
            cur_soft = comb
            cur_comb = soft
            swap_flag = 1
        else:
            cur_soft = soft
            cur_comb = comb
            swap_flag = 0

        # --- arm P: ratios, consensus, learner update ---
        for k in range(K):
            feat = sp if partial_true_beliefs else <int>mu_p[k]
            m = th_p[k, 0, feat]
            for a in range(1, A):
                if th_p[k, a, feat] > m:
                    m = th_p[k, a, feat]
            z = 0.0
            for a in range(A):
                w = exp(th_p[k, a, feat] - m)
                g_p[k, a] = w
                z += w
            for a in range(A):
                g_p[k, a] /= z
            r = g_p[k, <int>a_p[k]] / q_p[k]
            if r < rho_min:
                r = rho_min
            elif r > rho_max:
                r = rho_max
            rho[k] = r
            f0[k] = log(r)
        prod = 1.0
        for k in range(K):
            prod *= rho[k]
        out_rho_exact_p[n] = prod
        for t in range(consensus_rounds):
            for k in range(K):
                acc = 0.0
                for l in range(K):
                    acc += combination[k, l] * f0[l]
                f1[k] = acc
            for k in range(K):
                f0[k] = f1[k]
        for k in range(K):
            r = exp(K * f0[k])
            if r < lo_joint:
                r = lo_joint
            elif r > hi_joint:
                r = hi_joint
            rho_est[k] = r
            out_rho_est_p[n, k] = r

        proj = 0
        for k in range(K):
            mu = sp if partial_true_beliefs else <int>mu_p[k]
            eta = sp2 if partial_true_beliefs else <int>eta_p[k]
            delta = r_p[k] + gamma * om_p[k, eta] - om_p[k, mu]
            out_delta_p[n, k] = delta
            for s in range(S):
                tilde[k, s] = om_p[k, s]
            tilde[k, mu] += bp * rho_est[k] * delta
            nrm = 0.0
            for s in range(S):
                nrm += tilde[k, s] * tilde[k, s]
            nrm = sqrt(nrm)
            if nrm > guard:
                scale = guard / nrm
                for s in range(S):
                    tilde[k, s] *= scale
                proj += 1
            step = bt * rho_est[k] * delta
            for a in range(A):
                if a == <int>a_p[k]:
                    th_p[k, a, mu] += step * (1.0 - g_p[k, a])
                else:
                    th_p[k, a, mu] += step * (0.0 - g_p[k, a])
        out_proj_p[n] = proj
        for k in range(K):
            for s in range(S):
                acc = 0.0
                for l in range(K):
                    acc += combination[l, k] * tilde[l, s]
                om_p[k, s] = acc
        for k in range(K):
            for s in range(S):
                out_omega_p[n, k, s] = om_p[k, s]

        # --- arm F: same updates from true-state features ---
        for k in range(K):
            m = th_f[k, 0, sf]
            for a in range(1, A):
                if th_f[k, a, sf] > m:
                    m = th_f[k, a, sf]
            z = 0.0
            for a in range(A):
                w = exp(th_f[k, a, sf] - m)
                g_f[k, a] = w
                z += w
            for a in range(A):
                g_f[k, a] /= z
            r = g_f[k, <int>a_f[k]] / q_f[k]
            if r < rho_min:
                r = rho_min
            elif r > rho_max:
                r = rho_max
            rho[k] = r
            f0[k] = log(r)
        prod = 1.0
        for k in range(K):
            prod *= rho[k]
        out_rho_exact_f[n] = prod
        for t in range(consensus_rounds):
            for k in range(K):
                acc = 0.0
                for l in range(K):
                    acc += combination[k, l] * f0[l]
                f1[k] = acc
            for k in range(K):
                f0[k] = f1[k]
        for k in range(K):
            r = exp(K * f0[k])
            if r < lo_joint:
                r = lo_joint
            elif r > hi_joint:
                r = hi_joint
            rho_est[k] = r
            out_rho_est_f[n, k] = r

        proj = 0
        for k in range(K):
            delta = r_f[k] + gamma * om_f[k, sf2] - om_f[k, sf]
            out_delta_f[n, k] = delta
            for s in range(S):
                tilde[k, s] = om_f[k, s]
            tilde[k, sf] += bp * rho_est[k] * delta
            nrm = 0.0
            for s in range(S):
                nrm += tilde[k, s] * tilde[k, s]
            nrm = sqrt(nrm)
            if nrm > guard:
                scale = guard / nrm
                for s in range(S):
                    tilde[k, s] *= scale
                proj += 1
            step = bt * rho_est[k] * delta
            for a in range(A):
                if a == <int>a_f[k]:
                    th_f[k, a, sf] += step * (1.0 - g_f[k, a])
                else:
                    th_f[k, a, sf] += step * (0.0 - g_f[k, a])
        out_proj_f[n] = proj
        for k in range(K):
            for s in range(S):
                acc = 0.0
                for l in range(K):
                    acc += combination[l, k] * tilde[l, s]
                om_f[k, s] = acc
        for k in range(K):
            for s in range(S):
                out_omega_f[n, k, s] = om_f[k, s]

        # --- cross-arm actor distance ---
        for k in range(K):
            acc = 0.0
            for a in range(A):
                for s in range(S):
                    tmp = th_f[k, a, s] - th_p[k, a, s]
                    acc += tmp * tmp
            out_actor_gap[n, k] = sqrt(acc)

        # --- advance ---
        for k in range(K):
            mu_p[k] = eta_p[k]
        sp = sp2
        sf = sf2
