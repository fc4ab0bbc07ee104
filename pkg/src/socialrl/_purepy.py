"""Pure-Python paired-run kernel; the import-time fallback for the compiled
extension in ``_core``.

Both kernels execute the identical arithmetic in the identical order (scalar
libm calls, ascending-index sums, no vectorization), so on one machine they
produce bit-identical trajectories. Keep any change here in lockstep with
``_core.pyx``.

One call simulates both arms of a paired run for ``num_steps`` iterations:
the partial arm estimates the state with one social-learning round per step,
the full arm substitutes true-state basis vectors. Both consume the same
pre-drawn uniforms, which couples their trajectories (and, across drift
values, couples sweeps run from the same seed).
"""

from math import exp, log, sqrt, inf

BACKEND = "python"

DOWN, STAY, UP = 0, 1, 2


def _log0(x):
    return log(x) if x > 0.0 else -inf


def run_paired_core(
    num_steps,
    combination,          # (K, K)
    lik,                  # (K, 2, S)
    reward_pair,          # (S, S) state-pair reward component
    reward_action,        # (K, S, A) own-action reward component
    drift,
    obs_noise,
    halfwidth,
    init_state,
    sigma,
    floor,
    gamma,
    rho_min,
    rho_max,
    guard,
    consensus_rounds,
    behavior_mode,        # 0 uniform, 1 boltzmann
    chi,                  # (K, A, S)
    beta,                 # (N,)
    beta_theta,           # (N,)
    u_move,               # (N,)
    u_obs,                # (N, K)
    u_act,                # (N, K)
    partial_true_beliefs,
    # outputs, all preallocated
    out_state_p, out_state_f,          # (N,) int
    out_actions_p, out_actions_f,      # (N, K) int
    out_hard_p,                        # (N, K) int
    out_reward_p, out_reward_f,        # (N,)
    out_entropy_p,                     # (N, K)
    out_rho_est_p, out_rho_est_f,      # (N, K)
    out_rho_exact_p, out_rho_exact_f,  # (N,)
    out_delta_p, out_delta_f,          # (N, K)
    out_omega_p, out_omega_f,          # (N, K, S)
    out_actor_gap,                     # (N, K)
    out_proj_p, out_proj_f,            # (N,) int
):
    K = len(combination)
    S = len(lik[0][0])
    A = len(chi[0])

    C = [[float(combination[i][j]) for j in range(K)] for i in range(K)]
    L = [[[float(lik[k][o][s]) for s in range(S)] for o in range(2)] for k in range(K)]
    CHI = [[[float(chi[k][a][s]) for s in range(S)] for a in range(A)] for k in range(K)]
    RP = [[float(reward_pair[s][s2]) for s2 in range(S)] for s in range(S)]
    RA = [[[float(reward_action[k][s][a]) for a in range(A)] for s in range(S)] for k in range(K)]

    soft = [[1.0 / S] * S for _ in range(K)]
    mu_p = [0] * K
    om_p = [[0.0] * S for _ in range(K)]
    om_f = [[0.0] * S for _ in range(K)]
    th_p = [[[0.0] * S for _ in range(A)] for _ in range(K)]
    th_f = [[[0.0] * S for _ in range(A)] for _ in range(K)]

    psi = [[0.0] * S for _ in range(K)]
    comb = [[0.0] * S for _ in range(K)]
    tilde = [[0.0] * S for _ in range(K)]
    g_p = [[0.0] * A for _ in range(K)]
    g_f = [[0.0] * A for _ in range(K)]
    q_p = [0.0] * K
    q_f = [0.0] * K
    a_p = [0] * K
    a_f = [0] * K
    xi = [0] * K
    eta_p = [0] * K
    r_p = [0.0] * K
    r_f = [0.0] * K
    rho = [0.0] * K
    f0 = [0.0] * K
    f1 = [0.0] * K
    rho_est_p = [0.0] * K
    rho_est_f = [0.0] * K

    lo_joint = rho_min ** K
    hi_joint = rho_max ** K
    sp = init_state
    sf = init_state

    def behavior_dist(k, feat):
        if behavior_mode == 0:
            return [1.0 / A] * A
        logits = CHI[k]
        m = logits[0][feat]
        for a in range(1, A):
            if logits[a][feat] > m:
                m = logits[a][feat]
        dist = [0.0] * A
        z = 0.0
        for a in range(A):
            w = exp(logits[a][feat] - m)
            dist[a] = w
            z += w
        for a in range(A):
            dist[a] /= z
        return dist

    def sample(dist, u):
        cum = 0.0
        for a in range(A - 1):
            cum += dist[a]
            if u < cum:
                return a
        return A - 1

    def move_target(s, actions):
        t = s - 1 if actions[s] == UP else s + 1
        if t < 0 or t >= S:
            return s
        return t

    def target_softmax(theta_k, feat, out):
        m = theta_k[0][feat]
        for a in range(1, A):
            if theta_k[a][feat] > m:
                m = theta_k[a][feat]
        z = 0.0
        for a in range(A):
            w = exp(theta_k[a][feat] - m)
            out[a] = w
            z += w
        for a in range(A):
            out[a] /= z

    for n in range(num_steps):
        bp = float(beta[n])
        bt = float(beta_theta[n])
        out_state_p[n] = sp
        out_state_f[n] = sf

        # --- actions from the behavior policy (shared draws) ---
        for k in range(K):
            feat_p = sp if partial_true_beliefs else mu_p[k]
            dist = behavior_dist(k, feat_p)
            a_p[k] = sample(dist, float(u_act[n][k]))
            q_p[k] = dist[a_p[k]]
            dist = behavior_dist(k, sf)
            a_f[k] = sample(dist, float(u_act[n][k]))
            q_f[k] = dist[a_f[k]]
            out_actions_p[n][k] = a_p[k]
            out_actions_f[n][k] = a_f[k]
            out_hard_p[n][k] = mu_p[k]

        # --- environment transitions (shared move draw) ---
        um = float(u_move[n])
        sp2 = move_target(sp, a_p) if um < drift else sp
        sf2 = move_target(sf, a_f) if um < drift else sf
        acc = 0.0
        for k in range(K):
            r_p[k] = RP[sp][sp2] + RA[k][sp][a_p[k]]
            acc += r_p[k]
        out_reward_p[n] = acc / K
        acc = 0.0
        for k in range(K):
            r_f[k] = RP[sf][sf2] + RA[k][sf][a_f[k]]
            acc += r_f[k]
        out_reward_f[n] = acc / K

        # --- observations of the next state (partial arm) ---
        for k in range(K):
            in_window = abs(sp2 - k) <= halfwidth
            flip = float(u_obs[n][k]) < obs_noise
            xi[k] = 1 if in_window != flip else 0

        # --- one social-learning round: local update, combine, hard assign ---
        for k in range(K):
            row = L[k][xi[k]]
            sk = soft[k]
            pk = psi[k]
            m = -inf
            for s in range(S):
                t = _log0(row[s]) + (1.0 - sigma) * _log0(sk[s])
                pk[s] = t
                if t > m:
                    m = t
            z = 0.0
            for s in range(S):
                w = exp(pk[s] - m)
                pk[s] = w
                z += w
            for s in range(S):
                pk[s] /= z
            z = 0.0
            for s in range(S):
                if pk[s] < floor:
                    pk[s] = floor
                z += pk[s]
            for s in range(S):
                pk[s] /= z
        for k in range(K):
            pk = psi[k]
            for s in range(S):
                pk[s] = log(pk[s])
        for k in range(K):
            ck = comb[k]
            m = -inf
            for s in range(S):
                acc = 0.0
                for l in range(K):
                    acc += C[l][k] * psi[l][s]
                ck[s] = acc
                if acc > m:
                    m = acc
            z = 0.0
            for s in range(S):
                w = exp(ck[s] - m)
                ck[s] = w
                z += w
            for s in range(S):
                ck[s] /= z
            z = 0.0
            for s in range(S):
                if ck[s] < floor:
                    ck[s] = floor
                z += ck[s]
            for s in range(S):
                ck[s] /= z
            best = 0
            for s in range(1, S):
                if ck[s] > ck[best]:
                    best = s
            eta_p[k] = best
            ent = 0.0
            for s in range(S):
                ent -= ck[s] * log(ck[s])
            out_entropy_p[n][k] = ent
        soft, comb = comb, soft

        # --- arm P: ratios, consensus, learner update ---
        for k in range(K):
            feat = sp if partial_true_beliefs else mu_p[k]
            target_softmax(th_p[k], feat, g_p[k])
            r = g_p[k][a_p[k]] / q_p[k]
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
        for _ in range(consensus_rounds):
            for k in range(K):
                acc = 0.0
                for l in range(K):
                    acc += C[k][l] * f0[l]
                f1[k] = acc
            f0, f1 = f1, f0
        for k in range(K):
            r = exp(K * f0[k])
            if r < lo_joint:
                r = lo_joint
            elif r > hi_joint:
                r = hi_joint
            rho_est_p[k] = r
            out_rho_est_p[n][k] = r

        proj = 0
        for k in range(K):
            mu = sp if partial_true_beliefs else mu_p[k]
            eta = sp2 if partial_true_beliefs else eta_p[k]
            delta = r_p[k] + gamma * om_p[k][eta] - om_p[k][mu]
            out_delta_p[n][k] = delta
            tk = tilde[k]
            ok = om_p[k]
            for s in range(S):
                tk[s] = ok[s]
            tk[mu] += bp * rho_est_p[k] * delta
            nrm = 0.0
            for s in range(S):
                nrm += tk[s] * tk[s]
            nrm = sqrt(nrm)
            if nrm > guard:
                scale = guard / nrm
                for s in range(S):
                    tk[s] *= scale
                proj += 1
            gk = g_p[k]
            thk = th_p[k]
            step = bt * rho_est_p[k] * delta
            for a in range(A):
                indic = 1.0 if a == a_p[k] else 0.0
                thk[a][mu] += step * (indic - gk[a])
        out_proj_p[n] = proj
        for k in range(K):
            ok = om_p[k]
            for s in range(S):
                acc = 0.0
                for l in range(K):
                    acc += C[l][k] * tilde[l][s]
                ok[s] = acc
        for k in range(K):
            for s in range(S):
                out_omega_p[n][k][s] = om_p[k][s]

        # --- arm F: same updates from true-state features ---
        for k in range(K):
            target_softmax(th_f[k], sf, g_f[k])
            r = g_f[k][a_f[k]] / q_f[k]
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
        for _ in range(consensus_rounds):
            for k in range(K):
                acc = 0.0
                for l in range(K):
                    acc += C[k][l] * f0[l]
                f1[k] = acc
            f0, f1 = f1, f0
        for k in range(K):
            r = exp(K * f0[k])
            if r < lo_joint:
                r = lo_joint
            elif r > hi_joint:
                r = hi_joint
            rho_est_f[k] = r
            out_rho_est_f[n][k] = r

        proj = 0
        for k in range(K):
            delta = r_f[k] + gamma * om_f[k][sf2] - om_f[k][sf]
            out_delta_f[n][k] = delta
            tk = tilde[k]
            ok = om_f[k]
            for s in range(S):
                tk[s] = ok[s]
            tk[sf] += bp * rho_est_f[k] * delta
            nrm = 0.0
            for s in range(S):
                nrm += tk[s] * tk[s]
            nrm = sqrt(nrm)
            if nrm > guard:
                scale = guard / nrm
                for s in range(S):
                    tk[s] *= scale
                proj += 1
            gk = g_f[k]
            thk = th_f[k]
            step = bt * rho_est_f[k] * delta
            for a in range(A):
                indic = 1.0 if a == a_f[k] else 0.0
                thk[a][sf] += step * (indic - gk[a])
        out_proj_f[n] = proj
        for k in range(K):
            ok = om_f[k]
            for s in range(S):
                acc = 0.0
                for l in range(K):
                    acc += C[l][k] * tilde[l][s]
                ok[s] = acc
        for k in range(K):
            for s in range(S):
                out_omega_f[n][k][s] = om_f[k][s]

        # --- cross-arm actor distance ---
        for k in range(K):
            acc = 0.0
            for a in range(A):
                rowp = th_p[k][a]
                rowf = th_f[k][a]
                for s in range(S):
                    d = rowf[s] - rowp[s]
                    acc += d * d
            out_actor_gap[n][k] = sqrt(acc)

        # --- advance ---
        for k in range(K):
            mu_p[k] = eta_p[k]
        sp = sp2
        sf = sf2
