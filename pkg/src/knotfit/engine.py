"""Jitted sampling loop for identity-forward problems.

Mirrors runner.run_sampler step for step: same RNG streams, same update
formulas (through the shared kernels), same swap and ladder logic, so the
two loops produce identical traces; the equality test in the suite pins
that. Beam-forward problems use the reference loop, whose per-step cost
is dominated by the FEM solve anyway.
"""

from __future__ import annotations

import math

import numpy as np

from . import adapt as ad
from ._kernels import chain_step_kernel, sweep_block_kernel
from .curves import KnotModel, curve_on_grid
from .diagnostics import RunTrace
from .inference import LOG_2PI, build_prior_tables, log_likelihood, log_prior
from .rjmcmc import ProposalKind
from .runner import Problem, SamplerSettings, default_initial_state
from .tempering import adapt_ladder, geometric_ladder, swap_log_alpha

_KIND_BY_ID = (ProposalKind.MOVE, ProposalKind.BIRTH, ProposalKind.DEATH)


def run_sampler_compiled(
    problem: Problem,
    settings: SamplerSettings,
    seed,
    initial: KnotModel | None = None,
) -> RunTrace:
    grid, basis, priors, data = problem.grid, problem.basis, problem.priors, problem.data
    ng = grid.n_points
    n_chains = settings.n_chains if settings.tempered else 1
    eps = settings.epsilon if settings.epsilon is not None else ad.default_epsilon(priors.a_range)

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_chains + 1)
    rngs = [np.random.Generator(np.random.PCG64(children[i])) for i in range(n_chains)]
    swap_rng = np.random.Generator(np.random.PCG64(children[n_chains]))

    state0 = initial if initial is not None else default_initial_state(grid)
    state0.validate_on_grid(grid)
    ll0 = log_likelihood(state0, data, problem.fwd, grid, basis)
    lp0 = log_prior(state0, priors, grid)
    if lp0 == -np.inf:
        raise ValueError("initial state has zero prior probability")
    curve0 = curve_on_grid(state0, grid, basis)

    # per-chain buffers
    knot_idx = np.zeros((n_chains, ng), dtype=np.int64)
    knot_val = np.zeros((n_chains, ng))
    curve = np.zeros((n_chains, ng))
    state_f = np.zeros((n_chains, 3))
    state_i = np.zeros((n_chains, 3), dtype=np.int64)
    cov = np.zeros((n_chains, ng, ng))
    mean_hist = np.zeros((n_chains, ng))
    n0 = state0.n
    for c in range(n_chains):
        knot_idx[c, :n0] = state0.knot_indices
        knot_val[c, :n0] = state0.knot_values
        curve[c] = curve0
        state_f[c] = (ll0, lp0, 0.0)
        state_i[c] = (n0, 0, 0)
    xk = np.zeros((n_chains, ng))
    yk = np.zeros((n_chains, ng))
    cand_idx = np.zeros((n_chains, ng), dtype=np.int64)
    cand_val = np.zeros((n_chains, ng))
    cand_mo = np.zeros((n_chains, ng))
    pred = np.zeros((n_chains, data.k))

    basis_id = basis.kernel_id
    grid_coords = np.ascontiguousarray(grid.coords)
    data_x = np.ascontiguousarray(data.x)
    data_d = np.ascontiguousarray(data.d)
    var = data.noise_sd * data.noise_sd
    two_var = 2.0 * var
    ll_const = -0.5 * data.k * (LOG_2PI + math.log(var))
    log_count_table, log_loc_table = build_prior_tables(priors, grid)
    log_a_range = math.log(priors.a_range)
    sc_lo, sc_hi = settings.sc_bounds
    sigma_conv = ad.dimensional_scale(1) * (1.0 + eps)
    conv_move_base = 1.0 + eps

    ladder = geometric_ladder(n_chains, settings.ladder_floor)
    temps = ladder.temps.copy()
    n_pairs = max(n_chains - 1, 0)
    swap_attempts = np.zeros(n_pairs, dtype=np.int64)
    swap_accepts = np.zeros(n_pairs, dtype=np.int64)
    ladder_rounds = 0

    thin = settings.thin_stride
    n_rec = settings.n_steps // thin
    rec_steps = np.empty(n_rec, dtype=np.int64)
    rec_curves = np.empty((n_rec, ng))
    rec_n = np.empty(n_rec, dtype=np.int64)
    rec_ll = np.empty(n_rec)
    attempts = {k.value: 0 for k in ProposalKind}
    accepts = {k.value: 0 for k in ProposalKind}
    snapshot_attempts: dict[str, int] = {}
    snapshot_accepts: dict[str, int] = {}
    drift: list[tuple[int, float]] = []
    scale_trace: list[tuple[int, float]] = []
    var_track: list[tuple[int, int, float]] = []
    history = (
        [np.empty((settings.t0, ng)) for _ in range(n_chains)] if settings.adaptive else []
    )

    adapting = 0
    instrument = 1 if settings.instrument else 0
    track_cols = tuple(settings.variance_columns)
    burn_in_limit = settings.burn_in_fraction * settings.n_steps
    att3 = np.zeros(3, dtype=np.int64)
    acc3 = np.zeros(3, dtype=np.int64)
    dummy_hist = np.zeros((1, 1, 1))

    def init_adaptation() -> None:
        for c in range(n_chains):
            astate = ad.init_history(history[c], epsilon=eps)
            cov[c] = astate.cov
            mean_hist[c] = astate.mean
            state_i[c, 2] = astate.t

    def adapt_ladder_now() -> None:
        nonlocal ladder, ladder_rounds
        ladder_rounds += 1
        with np.errstate(invalid="ignore"):
            rates = np.where(swap_attempts > 0, swap_accepts / swap_attempts, np.nan)
        ladder = adapt_ladder(ladder, rates, ladder_rounds)
        temps[:] = ladder.temps
        swap_attempts[:] = 0
        swap_accepts[:] = 0

    def track_variance(t: int) -> None:
        for col in track_cols:
            var_track.append((t, col, float(cov[0, col, col])))

    if not settings.instrument:
        # block mode: jitted sweeps between python intervention points
        rng_tuple = tuple(rngs)
        hist3 = np.stack(history) if settings.adaptive else dummy_hist
        events = {settings.n_steps}
        if settings.adaptive:
            events.add(settings.t0)
        if n_chains > 1:
            events.update(
                t for t in range(settings.ladder_window, settings.n_steps + 1, settings.ladder_window)
                if t <= burn_in_limit
            )
        if track_cols:
            events.update(range(settings.variance_stride, settings.n_steps + 1, settings.variance_stride))
        if settings.counter_snapshot_at is not None:
            events.add(settings.counter_snapshot_at)
        t_cur = 0
        for t_next in sorted(events):
            if t_next > t_cur:
                collecting = 1 if (settings.adaptive and not adapting) else 0
                sweep_block_kernel(
                    rng_tuple, swap_rng,
                    knot_idx, knot_val, curve, state_f, state_i, cov, mean_hist,
                    xk, yk, cand_idx, cand_val, cand_mo, pred,
                    basis_id, grid_coords, data_x, data_d, two_var, ll_const,
                    log_count_table, log_loc_table, log_a_range, priors.a_min, priors.a_max,
                    adapting, eps, settings.target_accept, settings.gamma_exponent,
                    sc_lo, sc_hi, sigma_conv, conv_move_base,
                    temps, swap_attempts, swap_accepts,
                    t_cur, t_next - t_cur, thin,
                    rec_steps, rec_curves, rec_n, rec_ll,
                    hist3 if collecting else dummy_hist, collecting,
                    att3, acc3,
                )
                t_cur = t_next
            if settings.adaptive and not adapting and t_cur == settings.t0:
                history = [hist3[c] for c in range(n_chains)]
                init_adaptation()
                history = []
                adapting = 1
            if n_chains > 1 and t_cur % settings.ladder_window == 0 and t_cur <= burn_in_limit:
                adapt_ladder_now()
            if track_cols and t_cur % settings.variance_stride == 0 and adapting:
                track_variance(t_cur)
            if t_cur == settings.counter_snapshot_at:
                for k, kind in enumerate(_KIND_BY_ID):
                    snapshot_attempts[kind.value] = int(att3[k])
                    snapshot_accepts[kind.value] = int(acc3[k])
        for k, kind in enumerate(_KIND_BY_ID):
            attempts[kind.value] = int(att3[k])
            accepts[kind.value] = int(acc3[k])
    else:
        for t in range(1, settings.n_steps + 1):
            for c in range(n_chains):
                kind_id, accepted, log_alpha, drift_v, dlog_sc = chain_step_kernel(
                    rngs[c],
                    knot_idx[c], knot_val[c], curve[c], state_f[c], state_i[c],
                    cov[c], mean_hist[c],
                    xk[c], yk[c], cand_idx[c], cand_val[c], cand_mo[c], pred[c],
                    basis_id, grid_coords, data_x, data_d, two_var, ll_const,
                    log_count_table, log_loc_table, log_a_range, priors.a_min, priors.a_max,
                    adapting, eps, settings.target_accept, settings.gamma_exponent,
                    sc_lo, sc_hi, sigma_conv, conv_move_base,
                    float(temps[c]), instrument if c == 0 else 0,
                )
                if c == 0:
                    kind = _KIND_BY_ID[kind_id].value
                    attempts[kind] += 1
                    accepts[kind] += accepted
                    if adapting:
                        drift.append((t, drift_v))
                        if kind_id == 0:
                            scale_trace.append((int(state_i[0, 1]), dlog_sc))
                if settings.adaptive and not adapting:
                    history[c][t - 1] = curve[c]

            if t == settings.counter_snapshot_at:
                snapshot_attempts = dict(attempts)
                snapshot_accepts = dict(accepts)
            parity = (t - 1) % 2
            for i in range(parity, n_chains - 1, 2):
                log_alpha = swap_log_alpha(
                    state_f[i, 0], state_f[i + 1, 0], float(temps[i]), float(temps[i + 1])
                )
                swap_attempts[i] += 1
                if swap_rng.random() < math.exp(log_alpha):
                    swap_accepts[i] += 1
                    for arr in (knot_idx, knot_val, curve):
                        tmp = arr[i].copy()
                        arr[i] = arr[i + 1]
                        arr[i + 1] = tmp
                    for col in (0, 1):  # log_lik, log_prior move; log_sc stays
                        state_f[i, col], state_f[i + 1, col] = state_f[i + 1, col], state_f[i, col]
                    state_i[i, 0], state_i[i + 1, 0] = state_i[i + 1, 0], state_i[i, 0]

            if settings.adaptive and not adapting and t == settings.t0:
                init_adaptation()
                history = []
                adapting = 1

            if n_chains > 1 and t % settings.ladder_window == 0 and t <= burn_in_limit:
                adapt_ladder_now()

            if t % thin == 0:
                r = t // thin - 1
                rec_steps[r] = t
                rec_curves[r] = curve[0]
                rec_n[r] = state_i[0, 0]
                rec_ll[r] = state_f[0, 0]
            if track_cols and t % settings.variance_stride == 0 and adapting:
                track_variance(t)

    return RunTrace(
        steps=rec_steps,
        grid_curves=rec_curves,
        n_values=rec_n,
        log_liks=rec_ll,
        grid_coords=np.asarray(grid.coords),
        n_steps=settings.n_steps,
        thin_stride=thin,
        attempts=attempts,
        accepts=accepts,
        snapshot_attempts=snapshot_attempts,
        snapshot_accepts=snapshot_accepts,
        adapt_drift=np.array(drift) if drift else None,
        scale_trace=np.array(scale_trace) if scale_trace else None,
        variance_track=np.array(var_track) if var_track else None,
        final_cov_diag=np.diag(cov[0]).copy() if adapting else None,
    )
