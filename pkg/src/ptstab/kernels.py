"""Scalar numeric kernels shared by the controller, plants and integrator.

Everything here is written in the numba-compatible subset (floats, 1-D/2-D
float64 arrays, no Python objects) and decorated with :func:`maybe_njit`, so
it compiles under numba or runs as plain Python depending on
``PTSTAB_DISABLE_NUMBA``.

Functions that take other kernels as arguments (``closed_loop``,
``rk4_step``, ``rk4_integrate``) are compiled without caching, because numba
cannot cache first-class function arguments.
"""

import math

import numpy as np

from ._jit import maybe_njit

# -- layout of the packed controller-constant vector -------------------------
A0 = 0
TBAR = 1
CG1 = 2
CTG1 = 3
CG2 = 4
CTG2 = 5
ZETA0 = 6
ZFLOOR = 7
CTH = 8
CTH1 = 9
EPSR = 10
SWIDTH = 11
NUC = 12
NULOW = 13
LMAX = 14
SEPS1 = 15
SEPST2 = 16
SEPSIJ = 17
EPS11 = 18
DEADZONE = 19
RCAP = 20
ZEROU = 21
NCONST = 22

# -- layout of the bound-value vector filled by a plant's bounds kernel ------
PHI12 = 0
PHI23 = 1
GAM = 2
DGAM = 3
PBAR = 4
DPBAR = 5
NBOUND = 6

# -- layout of the controller output vector ----------------------------------
U = 0
U1 = 1
U2 = 2
DR = 3
DTH = 4
DTH1 = 5
RBIG = 6
OMEGA = 7
CHI = 8
CHI1 = 9
W1 = 10
W2 = 11
ZETA1 = 12
FLAG_DZ = 13
FLAG_RCAP = 14
NOUT = 15

# -- layout of the warp output vector -----------------------------------------
W_T = 0
W_ALPHA = 1
W_DALPHA = 2

# -- integrator status codes ---------------------------------------------------
OK = 0
NONFINITE = 1
FLOOR_BREACH = 2

FLOOR_CLAMP_TOL = 1e-9


# ---------------------------------------------------------------------------
# time warp a(t) = a0 t / (1 - t/Tbar)
# ---------------------------------------------------------------------------
@maybe_njit
def warp_tau(a0, tbar, t):
    return a0 * t / (1.0 - t / tbar)


@maybe_njit
def unwarp_t(a0, tbar, tau):
    return tau * tbar / (a0 * tbar + tau)


@maybe_njit
def alpha_of_tau(a0, tbar, tau):
    s = 1.0 + tau / (a0 * tbar)
    return a0 * s * s


@maybe_njit
def dalpha_of_tau(a0, tbar, tau):
    return (2.0 / tbar) * (1.0 + tau / (a0 * tbar))


@maybe_njit
def rational_warp(tau, c, w):
    w[W_T] = unwarp_t(c[A0], c[TBAR], tau)
    w[W_ALPHA] = alpha_of_tau(c[A0], c[TBAR], tau)
    w[W_DALPHA] = dalpha_of_tau(c[A0], c[TBAR], tau)


# ---------------------------------------------------------------------------
# design functions
# ---------------------------------------------------------------------------
@maybe_njit
def q1_value(phibar12, nu_c, zeta0):
    return phibar12 / nu_c + 2.0 * zeta0


@maybe_njit
def q2_value(gam, eps11):
    return gam * eps11


@maybe_njit
def zeta1_value(phibar12, dphibar12, gam, dgam, nu_c, zeta0, zeta_floor, eps11):
    """Return ``(zeta1, dzeta1/dx1)``; the derivative is 0 on the floor branch."""
    s = q1_value(phibar12, nu_c, zeta0) + q2_value(gam, eps11)
    if s > zeta_floor:
        return 4.0 * s, 4.0 * (dphibar12 / nu_c + dgam * eps11)
    return 4.0 * zeta_floor, 0.0


@maybe_njit
def w1_value(theta_hat, ratio, x1, zeta1, dzeta1, lmax, zeta0):
    s = dzeta1 * x1 + zeta1
    l2 = lmax * lmax
    z2 = zeta1 * zeta1
    th2 = theta_hat * theta_hat
    return (
        2.0 * theta_hat * lmax * abs(s)
        + (2.0 / zeta0) * l2 * ratio * ratio * z2
        + (4.0 / zeta0) * l2 * z2 * th2 * th2 * s * s
    )


@maybe_njit
def w2_value(theta_hat, x1, zeta1, dzeta1, gam, phibar12, lmax, zeta0,
             seps1, sepst2, sepsij, eps11):
    s = dzeta1 * x1 + zeta1
    l2 = lmax * lmax
    g2 = gam * gam
    th2 = theta_hat * theta_hat
    return (
        2.0 * l2 * g2 / zeta0 * (phibar12 * seps1 + th2 * zeta1 * zeta1 * sepst2)
        + 2.0 * gam * lmax * sepsij
        + (4.0 / zeta0) * eps11 * eps11 * phibar12 * g2 * l2 * s * s * th2
    )


@maybe_njit
def big_r_value(w1, w2, theta_hat, phibar12, nu_c):
    return max(1.0, (4.0 / nu_c) * (w1 * phibar12 + theta_hat * w2))


@maybe_njit
def omega_value(r, w1, w2, theta_hat, phi12, phi23, nu_lower, a0):
    return r / (nu_lower * a0) * (w1 * phi12 + theta_hat * w2 * phi23)


@maybe_njit
def gate_value(s, eps_r):
    if s >= 0.0:
        return 1.0
    if s <= -eps_r:
        return 0.0
    return 1.0 + s / eps_r


@maybe_njit
def sign_value(d, width):
    if width > 0.0:
        return d / max(abs(d), width)
    return 1.0 if d >= 0.0 else -1.0


@maybe_njit
def gamma1_from_alpha(alpha, cg1, ctg1):
    return 1.0 / (cg1 * alpha + ctg1)


@maybe_njit
def gamma2_from_alpha(alpha, cg1, ctg1, cg2, ctg2):
    return (cg2 * alpha + ctg2) * gamma1_from_alpha(alpha, cg1, ctg1)


@maybe_njit
def scale_state(x, r, zeta, eta):
    """Fill ``eta`` with (x2 + zeta)/r, x3/r^2, ..., xn/r^(n-1)."""
    n = x.shape[0]
    eta[0] = (x[1] + zeta) / r
    rp = r
    for i in range(1, n - 1):
        rp *= r
        eta[i] = x[i + 1] / rp


@maybe_njit
def controller_core(x, r, theta_hat, theta1_hat, alpha, dalpha, bv, P, coeffs, c, out, eta):
    """Evaluate the full control law and the controller-state rates.

    ``bv`` holds the known bound values at the current (x, t); ``coeffs`` are
    the gain coefficients with k_i = coeffs[i] * phi_(2,3)(x, t).  Results go
    to ``out`` (see the ``U``..``FLAG_RCAP`` indices) and the scaled state to
    ``eta``.
    """
    n = x.shape[0]
    m = n - 1
    x1 = x[0]
    phi12 = bv[PHI12]
    phi23 = bv[PHI23]
    gam = bv[GAM]
    phibar = bv[PBAR]

    zeta1, dzeta1 = zeta1_value(phibar, bv[DPBAR], gam, bv[DGAM], c[NUC],
                                c[ZETA0], c[ZFLOOR], c[EPS11])
    scale_state(x, r, theta_hat * x1 * zeta1, eta)

    keta = 0.0
    pb = 0.0
    eta2 = 0.0
    for j in range(m):
        keta += coeffs[j] * phi23 * eta[j]
        pb += eta[j] * P[j, m - 1]
        eta2 += eta[j] * eta[j]

    rn = r ** n
    inv_g1 = c[CG1] * alpha + c[CTG1]
    g2_over_g1 = c[CG2] * alpha + c[CTG2]

    u1 = -rn * inv_g1 * keta
    dz_active = 0.0
    if c[DEADZONE] > 0.0:
        xn = 0.0
        for i in range(n):
            xn += x[i] * x[i]
        if math.sqrt(xn) < c[DEADZONE]:
            dz_active = 1.0
    if dz_active > 0.0:
        u2 = 0.0
    else:
        u2 = -sign_value(pb, c[SWIDTH]) * (
            abs(keta) * rn * (inv_g1 + theta1_hat) + gam * (g2_over_g1 + theta1_hat)
        )
    if c[ZEROU] > 0.0:
        u1 = 0.0
        u2 = 0.0

    w2 = w2_value(theta_hat, x1, zeta1, dzeta1, gam, phibar, c[LMAX], c[ZETA0],
                  c[SEPS1], c[SEPST2], c[SEPSIJ], c[EPS11])
    chi = phi12 * q2_value(gam, c[EPS11]) * x1 * x1 + r * w2 * phi23 * eta2
    dth = dalpha + c[CTH] * chi / alpha
    ratio = alpha * dth / phi12
    w1 = w1_value(theta_hat, ratio, x1, zeta1, dzeta1, c[LMAX], c[ZETA0])
    bigr = big_r_value(w1, w2, theta_hat, phibar, c[NUC])
    om = omega_value(r, w1, w2, theta_hat, phi12, phi23, c[NULOW], c[A0])

    rcap_active = 0.0
    if r >= c[RCAP]:
        rcap_active = 1.0
        dr = gate_value(alpha - r, c[EPSR]) * dalpha
    else:
        dr = gate_value(bigr + alpha - r, c[EPSR]) * (om + dalpha)

    chi1 = 2.0 * r * r * abs(pb * keta) + 2.0 * abs(pb) * gam / r ** (n - 2)
    dth1 = c[CTH1] * chi1 / alpha

    out[U] = u1 + u2
    out[U1] = u1
    out[U2] = u2
    out[DR] = dr
    out[DTH] = dth
    out[DTH1] = dth1
    out[RBIG] = bigr
    out[OMEGA] = om
    out[CHI] = chi
    out[CHI1] = chi1
    out[W1] = w1
    out[W2] = w2
    out[ZETA1] = zeta1
    out[FLAG_DZ] = dz_active
    out[FLAG_RCAP] = rcap_active


# ---------------------------------------------------------------------------
# known bounds of the built-in plants
# ---------------------------------------------------------------------------
@maybe_njit
def example_bounds(x, t, bp, bv):
    """Known bound functions of the fifth-order example; bp = [c_beta]."""
    x1 = x[0]
    cb = bp[0]
    x2 = x1 * x1
    bv[PHI12] = 1.0 + x2
    bv[PHI23] = 1.0 + x2 * x2
    e = math.exp(x1) * abs(x1)
    if e >= 1.0 + x2:
        bv[GAM] = cb * e
        sgn = 1.0 if x1 >= 0.0 else -1.0
        bv[DGAM] = cb * math.exp(x1) * (abs(x1) + sgn)
    else:
        bv[GAM] = cb * (1.0 + x2)
        bv[DGAM] = cb * 2.0 * x1
    bv[PBAR] = 1.5
    bv[DPBAR] = 0.0


@maybe_njit
def second_order_bounds(x, t, bp, bv):
    """Known bounds of the second-order demo plant; bp = [c_beta]."""
    bv[PHI12] = 1.0
    bv[PHI23] = 1.0
    bv[GAM] = bp[0]
    bv[DGAM] = 0.0
    bv[PBAR] = 1.0
    bv[DPBAR] = 0.0


# ---------------------------------------------------------------------------
# closed loop in the warped time and the RK4 integrator
# ---------------------------------------------------------------------------
@maybe_njit(cache=False)
def closed_loop(warp_fn, bounds_fn, plant_fn, tau, s, ds, n, nz, bp, pp, c, P, coeffs,
                w, bv, out, eta, dx, dz):
    """d/dtau of the packed state s = [x, z, r, theta_hat, theta1_hat]."""
    warp_fn(tau, c, w)
    t = w[W_T]
    alpha = w[W_ALPHA]
    x = s[:n]
    z = s[n:n + nz]
    r = s[n + nz]
    th = s[n + nz + 1]
    th1 = s[n + nz + 2]
    bounds_fn(x, t, bp, bv)
    controller_core(x, r, th, th1, alpha, w[W_DALPHA], bv, P, coeffs, c, out, eta)
    plant_fn(x, z, out[U], t, pp, dx, dz)
    for i in range(n):
        ds[i] = dx[i] / alpha
    for i in range(nz):
        ds[n + i] = dz[i] / alpha
    ds[n + nz] = out[DR]
    ds[n + nz + 1] = out[DTH]
    ds[n + nz + 2] = out[DTH1]


@maybe_njit(cache=False)
def rk4_step(cl, warp_fn, bounds_fn, plant_fn, tau, s, h, n, nz, bp, pp, c, P, coeffs,
             snew, work):
    """One classical RK4 step; control is recomputed at every stage.

    Applies the post-step floor clamp on r and theta_hat and returns
    ``(status, component)``; component is -1 unless status is not OK.
    """
    dim = s.shape[0]
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    tmp = work[4]
    w = work[5][:3]
    bv = work[6][:NBOUND]
    out = work[7][:NOUT]
    eta = work[8][:n - 1]
    dx = work[9][:n]
    dz = work[10][:nz]

    cl(warp_fn, bounds_fn, plant_fn, tau, s, k1, n, nz, bp, pp, c, P, coeffs, w, bv, out, eta, dx, dz)
    for i in range(dim):
        tmp[i] = s[i] + 0.5 * h * k1[i]
    cl(warp_fn, bounds_fn, plant_fn, tau + 0.5 * h, tmp, k2, n, nz, bp, pp, c, P, coeffs, w, bv, out, eta, dx, dz)
    for i in range(dim):
        tmp[i] = s[i] + 0.5 * h * k2[i]
    cl(warp_fn, bounds_fn, plant_fn, tau + 0.5 * h, tmp, k3, n, nz, bp, pp, c, P, coeffs, w, bv, out, eta, dx, dz)
    for i in range(dim):
        tmp[i] = s[i] + h * k3[i]
    cl(warp_fn, bounds_fn, plant_fn, tau + h, tmp, k4, n, nz, bp, pp, c, P, coeffs, w, bv, out, eta, dx, dz)
    for i in range(dim):
        snew[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    for i in range(dim):
        if not math.isfinite(snew[i]):
            return NONFINITE, i

    warp_fn(tau + h, c, w)
    alpha = w[W_ALPHA]
    for i in range(n + nz, n + nz + 2):
        deficit = alpha - snew[i]
        if deficit > 0.0:
            if deficit <= FLOOR_CLAMP_TOL * max(1.0, alpha):
                snew[i] = alpha
            else:
                return FLOOR_BREACH, i
    return OK, -1


def make_work(dim, n):
    size = max(dim, NOUT, NBOUND, 3)
    return np.zeros((11, size))


@maybe_njit(cache=False)
def rk4_integrate(step, cl, warp_fn, bounds_fn, plant_fn, s0, tau0, h, nsteps, stride,
                  n, nz, bp, pp, c, P, coeffs, rec_tau, rec_s, rec_out, work):
    """Fixed-step RK4 from ``tau0`` over ``nsteps`` steps.

    ``step`` is :func:`rk4_step` (or its ``py_func`` on the Python path).
    Records every ``stride``-th state (including the initial one) together
    with the controller output evaluated at that state.  Returns
    ``(status, failed_step, component, n_recorded, dz_steps, rcap_steps)``.
    """
    dim = s0.shape[0]
    s = s0.copy()
    snew = np.empty(dim)
    ds = np.empty(dim)
    w = np.empty(3)
    bv = np.empty(NBOUND)
    out = np.empty(NOUT)
    eta = np.empty(n - 1)
    dx = np.empty(n)
    dz = np.empty(nz)

    nrec = 0
    dz_steps = 0
    rcap_steps = 0
    for k in range(nsteps + 1):
        tau = tau0 + k * h
        if k % stride == 0 or k == nsteps:
            cl(warp_fn, bounds_fn, plant_fn, tau, s, ds, n, nz, bp, pp, c, P, coeffs, w, bv, out, eta, dx, dz)
            rec_tau[nrec] = tau
            for i in range(dim):
                rec_s[nrec, i] = s[i]
            for i in range(NOUT):
                rec_out[nrec, i] = out[i]
            nrec += 1
        if k == nsteps:
            break
        status, comp = step(cl, warp_fn, bounds_fn, plant_fn, tau, s, h, n, nz, bp, pp, c, P,
                                coeffs, snew, work)
        if work[7][FLAG_DZ] > 0.0:
            dz_steps += 1
        if work[7][FLAG_RCAP] > 0.0:
            rcap_steps += 1
        if status != OK:
            return status, k, comp, nrec, dz_steps, rcap_steps
        for i in range(dim):
            s[i] = snew[i]
    return OK, nsteps, -1, nrec, dz_steps, rcap_steps
