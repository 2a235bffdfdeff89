"""Hot numeric kernels shared by the public modules and the trial engine.

Every function here is a pure, scalar/array computation with no I/O and no
randomness: all random numbers are drawn up front by the engine and passed in
as arrays. The functions carry ``@njit`` when numba is available and run as
plain Python otherwise (see ``_njit``); both paths produce identical floats.

Ring buffers are passed as ``(array, write_pos, length)`` triples where
``write_pos`` is the next slot to write and entries age backwards from
``write_pos - 1``.
"""

import math
from collections import namedtuple

import numpy as np

from ._njit import njit

SQRT2 = math.sqrt(2.0)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Accuracy floor handed to the fill-ratio estimator; 0.5 exactly is a pole of
# the estimate formula, so callers clamp just above it.
ACCURACY_EPS = 0.5 + 1e-6

# Floor for the count-measurement variance inside the Kalman gain. Unreachable
# while the gate keeps the predicted accuracy strictly inside (0, 1), but kept
# so the gain denominator can never be zero.
MEASUREMENT_VARIANCE_FLOOR = 1e-9

# Parameter bundles for the fused trial loop (plain namedtuples: numba-friendly
# and usable unchanged by the interpreter fallback).
MotionSpec = namedtuple(
    "MotionSpec",
    "step_length turn_prob avoid_range radius arena_side comm_radius",
)
DegradeSpec = namedtuple("DegradeSpec", "drift diffusion floor ceiling")
FilterSpec = namedtuple(
    "FilterSpec",
    "drift variance_rate lower upper literal_confidence",
)
OqaSpec = namedtuple("OqaSpec", "sensitivity window capacity literal_derivative")


# ---------------------------------------------------------------------------
# world
# ---------------------------------------------------------------------------


@njit
def black_tile_probability(b, f):
    return b * f + (1.0 - b) * (1.0 - f)


@njit
def wiener_step(b, drift, diffusion, g, floor, ceiling):
    b = b + drift + diffusion * g
    if b < floor:
        return floor
    if b > ceiling:
        return ceiling
    return b


@njit
def degradation_paths(initial, drift, diffusion, floor, ceiling, noise):
    """Advance ``noise.shape[1]`` accuracy paths through ``noise.shape[0]`` steps."""
    n_steps, n_paths = noise.shape
    b = np.full(n_paths, initial)
    for k in range(n_steps):
        b = np.minimum(np.maximum(b + drift + diffusion * noise[k], floor), ceiling)
    return b


# ---------------------------------------------------------------------------
# fre
# ---------------------------------------------------------------------------


@njit
def local_estimate(n, t, b_prev):
    ratio = (n / t + b_prev - 1.0) / (2.0 * b_prev - 1.0)
    if ratio <= 0.0:
        return 0.0
    if ratio >= 1.0:
        return 1.0
    return ratio


@njit
def local_confidence(n, t, b_prev, b_sq, estimate):
    """Fisher-information weight for a local estimate.

    ``b_prev`` enters the linear factors, ``b_sq`` the squared ones; the two
    coincide except under the split-evaluation sensitivity switch. At the
    count extremes with a single accuracy the branch numerator factors as
    nu^2 * t * (b - 1)^2, so the cancelled form is used: it stays finite at
    b = 1 where the raw quotient is 0/0.
    """
    nu = 2.0 * b_prev - 1.0
    if 0.0 < estimate < 1.0:
        return nu * nu * t * t * t / (n * (t - n))
    if (n == 0 or n == t) and (b_sq == b_prev or b_prev >= 1.0):
        # Also covers the split variant's pole at b_prev = 1, where the raw
        # quotient is not even defined.
        return nu * nu * t / (b_sq * b_sq)
    if estimate <= 0.0:
        num = nu * nu * (t * b_sq * b_sq - nu * (t - n))
    else:
        num = nu * nu * (t * b_sq * b_sq - nu * n)
    den = b_sq * b_sq * (b_prev - 1.0) * (b_prev - 1.0)
    out = num / den
    # The split variant can drive the printed numerator negative; a weight
    # below zero is meaningless, so floor it. Unreachable with b_sq == b_prev.
    return out if out > 0.0 else 0.0


@njit
def informed_estimate(x_local, conf_local, x_social, conf_social):
    total = conf_local + conf_social
    if total <= 0.0:
        return x_local
    return (conf_local * x_local + conf_social * x_social) / total


@njit
def weighted_moving_average(values, pos, length, window):
    """Triangular average of a ring buffer, heaviest weight on the oldest entry.

    Entry ``j`` steps old gets weight ``j + 1``; ``window`` is clipped to the
    stored length.
    """
    q = window if window < length else length
    cap = values.shape[0]
    num = 0.0
    den = 0.0
    for j in range(q):
        idx = pos - 1 - j
        if idx < 0:
            idx += cap
        w = float(j + 1)
        num += w * values[idx]
        den += w
    return num / den


# ---------------------------------------------------------------------------
# sae
# ---------------------------------------------------------------------------


@njit
def measurement_model(b, t, reference):
    slope = 2.0 * reference - 1.0
    expected = t * (b * slope - reference + 1.0)
    jacobian = t * slope
    return expected, jacobian


@njit
def gate_open(t, predicted_mean):
    return t * predicted_mean >= 5.0 and t * (1.0 - predicted_mean) >= 5.0


@njit
def ekf_update(mean, variance, n, t, reference):
    """Measurement update against the Gaussian limit of the count likelihood.

    Assumes the caller already applied the gate, which keeps the predicted
    mean strictly inside (0, 1).
    """
    q = black_tile_probability(mean, reference)
    noise = t * q * (1.0 - q)
    if noise < MEASUREMENT_VARIANCE_FLOOR:
        noise = MEASUREMENT_VARIANCE_FLOOR
    expected, jacobian = measurement_model(mean, t, reference)
    gain = variance * jacobian / (jacobian * jacobian * variance + noise)
    new_mean = mean + gain * (n - expected)
    new_variance = (1.0 - gain * jacobian) * variance
    return new_mean, new_variance


# ---------------------------------------------------------------------------
# cc
# ---------------------------------------------------------------------------


@njit
def truncated_mean(lower, upper):
    den = math.erf(upper / SQRT2) - math.erf(lower / SQRT2)
    if abs(den) < 1e-15:
        # Both limits so deep in one tail that the mass underflows; the exact
        # mean hugs whichever limit is nearer the origin.
        return lower if abs(lower) < abs(upper) else upper
    num = SQRT_2_OVER_PI * (
        math.exp(-0.5 * lower * lower) - math.exp(-0.5 * upper * upper)
    )
    return num / den


@njit
def constrain_accuracy(mean, variance, lower, upper):
    if lower <= mean <= upper:
        return mean
    rho = math.sqrt(variance)
    if rho <= 0.0:
        return lower if mean < lower else upper
    d_lower = (lower - mean) / rho
    d_upper = (upper - mean) / rho
    shifted = mean + rho * truncated_mean(d_lower, d_upper)
    if shifted < lower:
        return lower
    if shifted > upper:
        return upper
    return shifted


# ---------------------------------------------------------------------------
# oqa
# ---------------------------------------------------------------------------


@njit
def accuracy_derivative(trail, pos, length, window, literal):
    """Smoothed per-entry change of the stored accuracy trail.

    Default weighting mirrors the informed-estimate moving average (weight
    ``j + 1`` on the difference ``j`` entries old) so a constant-rate trail
    returns that rate. ``literal`` keeps the numerator unweighted while the
    denominator stays triangular, which shrinks a constant rate by
    2 / (w + 1); retained for comparison only.
    """
    avail = length - 1
    w = window if window < avail else avail
    cap = trail.shape[0]
    num = 0.0
    den = 0.0
    for j in range(w):
        hi = pos - 1 - j
        if hi < 0:
            hi += cap
        lo = pos - 2 - j
        if lo < 0:
            lo += cap
        diff = trail[hi] - trail[lo]
        if literal:
            num += diff
        else:
            num += (j + 1) * diff
        den += j + 1
    return num / den


@njit
def adjusted_observation_count(sensitivity, t_obs, reference, rate, step, window, capacity):
    if step < window * t_obs:
        t = step // t_obs
        if t < 1:
            t = 1
        if t > capacity:
            t = capacity
        return t
    den = abs(t_obs * (2.0 * reference - 1.0) * rate)
    if den <= 0.0:
        return capacity
    raw = sensitivity / den
    if raw >= capacity:
        return capacity
    t = int(math.ceil(raw))
    if t < 1:
        t = 1
    return t


@njit
def window_counts(queue, pos, length, t):
    if length == 0:
        return 0, 0
    t_eff = t if t < length else length
    cap = queue.shape[0]
    n = 0
    for j in range(t_eff):
        idx = pos - 1 - j
        if idx < 0:
            idx += cap
        # int() keeps the accumulator at machine width; int8 += would wrap.
        n += int(queue[idx])
    return n, t_eff


# ---------------------------------------------------------------------------
# motion
# ---------------------------------------------------------------------------


@njit
def wrap_angle(a):
    a = (a + math.pi) % (2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@njit
def diffuse_step(x, y, heading, others_x, others_y, n_others, motion, u_turn, u_angle):
    """One kinematic step: random turn, steer-away avoidance, wall reflection.

    ``u_turn`` and ``u_angle`` are both consumed every call so replaying a
    stream stays aligned whether or not the turn fires.
    """
    if u_turn < motion.turn_prob:
        heading = wrap_angle(heading + (2.0 * u_angle - 1.0) * math.pi)

    # Head straight away from the nearest peer inside the avoidance range.
    best = motion.avoid_range * motion.avoid_range
    best_j = -1
    for j in range(n_others):
        dx = others_x[j] - x
        dy = others_y[j] - y
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
            best_j = j
    if best_j >= 0:
        heading = math.atan2(y - others_y[best_j], x - others_x[best_j])

    nx = x + motion.step_length * math.cos(heading)
    ny = y + motion.step_length * math.sin(heading)

    # Specular wall reflection plus a jitter that reuses the turn-angle draw;
    # without it, near-periodic bounce orbits survive for thousands of steps
    # and show up as occupancy hot spots. The disc center may reach the wall
    # itself: a center margin would carve the corner cells' accessible area
    # down by several percent and bias the occupancy histogram.
    jitter = (2.0 * u_angle - 1.0) * (math.pi / 6.0)
    lo = 0.0
    hi = motion.arena_side
    if nx < lo:
        nx = lo + (lo - nx)
        heading = wrap_angle(math.pi - heading + jitter)
    elif nx > hi:
        nx = hi - (nx - hi)
        heading = wrap_angle(math.pi - heading + jitter)
    if ny < lo:
        ny = lo + (lo - ny)
        heading = wrap_angle(-heading + jitter)
    elif ny > hi:
        ny = hi - (ny - hi)
        heading = wrap_angle(-heading + jitter)

    # Guard against a reflection overshooting in a pathologically small arena.
    if nx < lo:
        nx = lo
    elif nx > hi:
        nx = hi
    if ny < lo:
        ny = lo
    elif ny > hi:
        ny = hi
    return nx, ny, heading


# ---------------------------------------------------------------------------
# fused trial loop
# ---------------------------------------------------------------------------


@njit
def simulate(
    n_steps,
    t_obs,
    t_comms,
    t_bcpf,
    record_every,
    ablation,
    motion,
    degrade,
    filt,
    oqa,
    drop_prob,
    grid,
    tile_size,
    pos,
    heading,
    b_true,
    ekf_mean,
    ekf_var,
    b_assumed,
    motion_u,
    degrade_g,
    obs_u,
    drop_u,
    queue,
    queue_pos,
    queue_len,
    history,
    hist_pos,
    hist_len,
    trail,
    trail_pos,
    trail_len,
    rec_step,
    rec_b_true,
    rec_b_assumed,
    rec_x,
    rec_x_wma,
    rec_n,
    rec_t,
    occupancy,
):
    """Run one lockstep trial over pre-drawn randomness; fills the rec_* arrays.

    Per step, in order: move (from the previous step's position snapshot),
    degrade the true accuracy, observe every ``t_obs`` steps, exchange and fuse
    estimates every ``t_comms`` steps, refresh the local/informed estimates
    whenever a usable window exists, and every ``t_bcpf`` steps run the
    accuracy filter (predict, gated update, constraint) followed by the
    window-size adjustment. Returns the pairwise-overlap event count.
    """
    n_agents = pos.shape[0]
    n_tiles = grid.shape[0]
    occ_bins = occupancy.shape[0]
    occ_w = motion.arena_side / occ_bins

    x_hat = np.zeros(n_agents)
    alpha = np.zeros(n_agents)
    has_belief = np.zeros(n_agents, np.bool_)
    x_social = np.zeros(n_agents)
    conf_social = np.zeros(n_agents)
    x_informed = np.zeros(n_agents)
    x_wma = np.zeros(n_agents)
    n_window = np.zeros(n_agents, np.int64)
    t_window = np.zeros(n_agents, np.int64)
    rate = np.zeros(n_agents)
    b_prev = b_assumed.copy()

    new_x = np.zeros(n_agents)
    new_y = np.zeros(n_agents)
    new_h = np.zeros(n_agents)
    pkt_x = np.zeros(n_agents)
    pkt_a = np.zeros(n_agents)
    pkt_ok = np.zeros(n_agents, np.bool_)
    ox = np.zeros(n_agents)
    oy = np.zeros(n_agents)

    comm_r2 = motion.comm_radius * motion.comm_radius
    diam2 = (2.0 * motion.radius) * (2.0 * motion.radius)
    overlap_events = 0

    for k in range(1, n_steps + 1):
        # Motion, computed for everyone from the step-start snapshot.
        for i in range(n_agents):
            m = 0
            for j in range(n_agents):
                if j != i:
                    ox[m] = pos[j, 0]
                    oy[m] = pos[j, 1]
                    m += 1
            nx, ny, nh = diffuse_step(
                pos[i, 0],
                pos[i, 1],
                heading[i],
                ox,
                oy,
                m,
                motion,
                motion_u[k - 1, i, 0],
                motion_u[k - 1, i, 1],
            )
            new_x[i] = nx
            new_y[i] = ny
            new_h[i] = nh
        for i in range(n_agents):
            pos[i, 0] = new_x[i]
            pos[i, 1] = new_y[i]
            heading[i] = new_h[i]
            gx = int(pos[i, 0] / occ_w)
            if gx >= occ_bins:
                gx = occ_bins - 1
            gy = int(pos[i, 1] / occ_w)
            if gy >= occ_bins:
                gy = occ_bins - 1
            occupancy[gy, gx] += 1
        for i in range(n_agents):
            for j in range(i + 1, n_agents):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                if dx * dx + dy * dy < diam2:
                    overlap_events += 1

        # Sensor degradation.
        for i in range(n_agents):
            b_true[i] = wiener_step(
                b_true[i],
                degrade.drift,
                degrade.diffusion,
                degrade_g[k - 1, i],
                degrade.floor,
                degrade.ceiling,
            )
            if ablation:
                b_assumed[i] = b_true[i]
                b_prev[i] = b_true[i]

        # Observation.
        if k % t_obs == 0:
            row = k // t_obs - 1
            for i in range(n_agents):
                gx = int(pos[i, 0] / tile_size)
                if gx >= n_tiles:
                    gx = n_tiles - 1
                gy = int(pos[i, 1] / tile_size)
                if gy >= n_tiles:
                    gy = n_tiles - 1
                color = grid[gy, gx]
                if obs_u[row, i] < b_true[i]:
                    z = color
                else:
                    z = 1 - color
                queue[i, queue_pos[i]] = z
                queue_pos[i] = (queue_pos[i] + 1) % queue.shape[1]
                if queue_len[i] < queue.shape[1]:
                    queue_len[i] += 1

        # Communication: snapshot packets, then fuse per receiver.
        if k % t_comms == 0:
            row = k // t_comms - 1
            for i in range(n_agents):
                pkt_x[i] = x_hat[i]
                pkt_a[i] = alpha[i]
                pkt_ok[i] = has_belief[i]
            for i in range(n_agents):
                s_conf = 0.0
                s_weighted = 0.0
                for j in range(n_agents):
                    if j == i or not pkt_ok[j]:
                        continue
                    dx = pos[i, 0] - pos[j, 0]
                    dy = pos[i, 1] - pos[j, 1]
                    if dx * dx + dy * dy > comm_r2:
                        continue
                    if drop_prob > 0.0 and drop_u[row, i, j] < drop_prob:
                        continue
                    s_conf += pkt_a[j]
                    s_weighted += pkt_a[j] * pkt_x[j]
                if s_conf > 0.0:
                    x_social[i] = s_weighted / s_conf
                    conf_social[i] = s_conf
                else:
                    x_social[i] = 0.0
                    conf_social[i] = 0.0

        # Fill ratio estimation, every control step once a window exists.
        for i in range(n_agents):
            if t_window[i] < 1:
                continue
            b_lin = b_assumed[i]
            if b_lin < ACCURACY_EPS:
                b_lin = ACCURACY_EPS
            if filt.literal_confidence and not ablation:
                b_lin_prev = b_prev[i]
                if b_lin_prev < ACCURACY_EPS:
                    b_lin_prev = ACCURACY_EPS
                est = local_estimate(n_window[i], t_window[i], b_lin_prev)
                conf = local_confidence(
                    n_window[i], t_window[i], b_lin_prev, b_lin, est
                )
            else:
                est = local_estimate(n_window[i], t_window[i], b_lin)
                conf = local_confidence(n_window[i], t_window[i], b_lin, b_lin, est)
            x = informed_estimate(est, conf, x_social[i], conf_social[i])
            history[i, hist_pos[i]] = x
            hist_pos[i] = (hist_pos[i] + 1) % history.shape[1]
            if hist_len[i] < history.shape[1]:
                hist_len[i] += 1
            x_hat[i] = est
            alpha[i] = conf
            x_informed[i] = x
            x_wma[i] = weighted_moving_average(
                history[i], hist_pos[i], hist_len[i], t_window[i]
            )
            has_belief[i] = True

        # Accuracy filter, constraint and window adjustment.
        if k % t_bcpf == 0:
            for i in range(n_agents):
                if not ablation:
                    mean = ekf_mean[i] + filt.drift
                    var = ekf_var[i] + filt.variance_rate
                    if gate_open(t_window[i], mean):
                        mean, var = ekf_update(
                            mean, var, n_window[i], t_window[i], x_wma[i]
                        )
                    ekf_mean[i] = mean
                    ekf_var[i] = var
                    b_prev[i] = b_assumed[i]
                    b_assumed[i] = constrain_accuracy(
                        mean, var, filt.lower, filt.upper
                    )
                trail[i, trail_pos[i]] = b_assumed[i]
                trail_pos[i] = (trail_pos[i] + 1) % trail.shape[1]
                if trail_len[i] < trail.shape[1]:
                    trail_len[i] += 1
                if trail_len[i] >= 2:
                    rate[i] = (
                        accuracy_derivative(
                            trail[i],
                            trail_pos[i],
                            trail_len[i],
                            oqa.window,
                            oqa.literal_derivative,
                        )
                        / t_bcpf
                    )
                else:
                    rate[i] = 0.0
                t_new = adjusted_observation_count(
                    oqa.sensitivity,
                    t_obs,
                    x_wma[i],
                    rate[i],
                    k,
                    oqa.window,
                    oqa.capacity,
                )
                n_i, t_i = window_counts(queue[i], queue_pos[i], queue_len[i], t_new)
                n_window[i] = n_i
                t_window[i] = t_i

        if k % record_every == 0:
            row = k // record_every - 1
            rec_step[row] = k
            for i in range(n_agents):
                rec_b_true[row, i] = b_true[i]
                rec_b_assumed[row, i] = b_assumed[i]
                rec_x[row, i] = x_informed[i]
                rec_x_wma[row, i] = x_wma[i]
                rec_n[row, i] = n_window[i]
                rec_t[row, i] = t_window[i]

    return overlap_events
