"""Vendored reference implementations of the classic control environments.

These are line-faithful ports of the public reference dynamics (classic
control suite): Euler-integrated cart-pole and RK4-integrated acrobot,
including the reference reward conventions (cart-pole pays +1 every step,
acrobot pays -1 on non-terminal steps and 0 on the goal-reaching step) and
the reference episode time limits. They exist so the bridge can serve a
reference oracle on machines where gymnasium is not installable.
"""

from math import cos, pi, sin

import numpy as np


def wrap(x, m, M):
    """Wrap x into [m, M] by shifting in multiples of the interval width."""
    diff = M - m
    while x > M:
        x = x - diff
    while x < m:
        x = x + diff
    return x


def bound(x, m, M):
    return min(max(x, m), M)


def rk4(derivs, y0, t):
    """Classic fourth-order Runge-Kutta over the time grid t.

    Returns the first four components of the final state (the augmented
    torque component is cleaved off, matching the reference utility).
    """
    yout = np.zeros((len(t), len(y0)), dtype=np.float64)
    yout[0] = y0
    for i in range(len(t) - 1):
        dt = t[i + 1] - t[i]
        dt2 = dt / 2.0
        y0 = yout[i]
        k1 = np.asarray(derivs(y0))
        k2 = np.asarray(derivs(y0 + dt2 * k1))
        k3 = np.asarray(derivs(y0 + dt2 * k2))
        k4 = np.asarray(derivs(y0 + dt * k3))
        yout[i + 1] = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return yout[-1][:4]


class ReferenceCartPole:
    """Cart-pole with the reference constants and Euler kinematics."""

    obs_dim = 4
    n_actions = 2

    def __init__(self, max_episode_steps=500):
        self.gravity = 9.8
        self.masscart = 1.0
        self.masspole = 0.1
        self.total_mass = self.masspole + self.masscart
        self.length = 0.5  # half the pole's length
        self.polemass_length = self.masspole * self.length
        self.force_mag = 10.0
        self.tau = 0.02
        self.theta_threshold_radians = 12 * 2 * pi / 360
        self.x_threshold = 2.4
        self.max_episode_steps = max_episode_steps
        self.state = None
        self.steps = 0
        self.done = False
        self._rng = np.random.default_rng()

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.state = self._rng.uniform(low=-0.05, high=0.05, size=(4,))
        self.steps = 0
        self.done = False
        return self.state.copy()

    def set_state(self, raw):
        self.state = np.asarray(raw, dtype=np.float64).copy()
        self.done = False

    def get_state(self):
        return self.state.copy()

    def step(self, action):
        if self.done:
            raise RuntimeError("step() called on a finished episode")
        if action not in (0, 1):
            raise ValueError(f"invalid action {action!r}")
        x, x_dot, theta, theta_dot = self.state
        force = self.force_mag if action == 1 else -self.force_mag
        costheta = cos(theta)
        sintheta = sin(theta)

        temp = (
            force + self.polemass_length * theta_dot**2 * sintheta
        ) / self.total_mass
        thetaacc = (self.gravity * sintheta - costheta * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * costheta**2 / self.total_mass)
        )
        xacc = temp - self.polemass_length * thetaacc * costheta / self.total_mass

        # Euler kinematics, the reference default
        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * xacc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * thetaacc
        self.state = np.array([x, x_dot, theta, theta_dot], dtype=np.float64)

        terminated = bool(
            x < -self.x_threshold
            or x > self.x_threshold
            or theta < -self.theta_threshold_radians
            or theta > self.theta_threshold_radians
        )
        self.steps += 1
        truncated = self.steps >= self.max_episode_steps
        self.done = terminated or truncated
        return self.state.copy(), 1.0, self.done


class ReferenceAcrobot:
    """Two-link underactuated pendulum with the reference 'book' dynamics."""

    obs_dim = 6
    n_actions = 3

    dt = 0.2
    LINK_LENGTH_1 = 1.0
    LINK_LENGTH_2 = 1.0
    LINK_MASS_1 = 1.0
    LINK_MASS_2 = 1.0
    LINK_COM_POS_1 = 0.5
    LINK_COM_POS_2 = 0.5
    LINK_MOI = 1.0
    MAX_VEL_1 = 4 * pi
    MAX_VEL_2 = 9 * pi
    AVAIL_TORQUE = [-1.0, 0.0, +1.0]

    def __init__(self, max_episode_steps=500):
        self.max_episode_steps = max_episode_steps
        self.state = None
        self.steps = 0
        self.done = False
        self._rng = np.random.default_rng()

    def reset(self, seed=None):
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self.state = self._rng.uniform(low=-0.1, high=0.1, size=(4,))
        self.steps = 0
        self.done = False
        return self._get_ob()

    def set_state(self, raw):
        self.state = np.asarray(raw, dtype=np.float64).copy()
        self.done = False

    def get_state(self):
        return self.state.copy()

    def _get_ob(self):
        s = self.state
        return np.array(
            [cos(s[0]), sin(s[0]), cos(s[1]), sin(s[1]), s[2], s[3]],
            dtype=np.float64,
        )

    def _terminal(self):
        s = self.state
        return bool(-cos(s[0]) - cos(s[1] + s[0]) > 1.0)

    def _dsdt(self, s_augmented):
        m1 = self.LINK_MASS_1
        m2 = self.LINK_MASS_2
        l1 = self.LINK_LENGTH_1
        lc1 = self.LINK_COM_POS_1
        lc2 = self.LINK_COM_POS_2
        I1 = self.LINK_MOI
        I2 = self.LINK_MOI
        g = 9.8
        a = s_augmented[-1]
        s = s_augmented[:-1]
        theta1, theta2, dtheta1, dtheta2 = s
        d1 = (
            m1 * lc1**2
            + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * cos(theta2))
            + I1
            + I2
        )
        d2 = m2 * (lc2**2 + l1 * lc2 * cos(theta2)) + I2
        phi2 = m2 * lc2 * g * cos(theta1 + theta2 - pi / 2.0)
        phi1 = (
            -m2 * l1 * lc2 * dtheta2**2 * sin(theta2)
            - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * sin(theta2)
            + (m1 * lc1 + m2 * l1) * g * cos(theta1 - pi / 2)
            + phi2
        )
        # "book" variant of the equations of motion
        ddtheta2 = (
            a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * sin(theta2) - phi2
        ) / (m2 * lc2**2 + I2 - d2**2 / d1)
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0

    def step(self, action):
        if self.done:
            raise RuntimeError("step() called on a finished episode")
        if action not in (0, 1, 2):
            raise ValueError(f"invalid action {action!r}")
        torque = self.AVAIL_TORQUE[action]
        s_augmented = np.append(self.state, torque)
        ns = rk4(self._dsdt, s_augmented, [0, self.dt])
        ns[0] = wrap(ns[0], -pi, pi)
        ns[1] = wrap(ns[1], -pi, pi)
        ns[2] = bound(ns[2], -self.MAX_VEL_1, self.MAX_VEL_1)
        ns[3] = bound(ns[3], -self.MAX_VEL_2, self.MAX_VEL_2)
        self.state = ns

        terminated = self._terminal()
        reward = -1.0 if not terminated else 0.0
        self.steps += 1
        truncated = self.steps >= self.max_episode_steps
        self.done = terminated or truncated
        return self._get_ob(), reward, self.done


VENDORED = {
    "CartPole-v0": lambda: ReferenceCartPole(max_episode_steps=200),
    "CartPole-v1": lambda: ReferenceCartPole(max_episode_steps=500),
    "Acrobot-v1": lambda: ReferenceAcrobot(max_episode_steps=500),
}
