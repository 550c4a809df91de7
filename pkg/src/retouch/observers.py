"""First-order signal observers used by the 500 Hz loop.

All filters are forward-Euler discretizations of y' = cutoff * (x - y), one
state per joint. Velocity comes from pseudo-differentiation of the measured
angle; torque estimates come from the velocity-form disturbance observer
(DOB) and reaction force observer (RFOB). The DOB input deliberately excludes
the friction/gravity feedforward already applied to the plant, so its output
estimates the residual unknown disturbance and tau_dis_hat = tau_obs + comp
does not double-count the model-based terms.
"""

from dataclasses import dataclass

import numpy as np

from .model import N_JOINTS, RobotParams


def lpf_update(y, x, cutoff, dt):
    """One forward-Euler step of a first-order low-pass filter.

    Works elementwise on arrays. Stable for cutoff * dt < 2; the largest
    product used here is 90 * 0.002 = 0.18.
    """
    return y + dt * cutoff * (x - y)


@dataclass
class ObserverBank:
    """Per-joint filter states for one robot."""

    cutoff: np.ndarray
    diff_lpf: np.ndarray    # low-passed measured angle (pseudo-differentiation)
    dob_lpf: np.ndarray     # DOB internal state z
    rfob_lpf: np.ndarray    # RFOB internal state
    dq_hat: np.ndarray
    tau_obs: np.ndarray     # DOB output before adding feedforward comp
    tau_res_hat: np.ndarray

    @staticmethod
    def create(p: RobotParams, q0) -> "ObserverBank":
        """Bank at rest: the position filter starts on q0 so dq_hat starts at 0."""
        return ObserverBank(
            cutoff=p.cutoff_arr.copy(),
            diff_lpf=np.asarray(q0, dtype=float).copy(),
            dob_lpf=np.zeros(N_JOINTS),
            rfob_lpf=np.zeros(N_JOINTS),
            dq_hat=np.zeros(N_JOINTS),
            tau_obs=np.zeros(N_JOINTS),
            tau_res_hat=np.zeros(N_JOINTS),
        )


def pseudo_diff_update(bank: ObserverBank, q_meas, dt: float) -> np.ndarray:
    """Velocity estimate dq_hat = cutoff * (q - lpf(q)).

    Realizes the transfer function cutoff*s / (s + cutoff). The estimate is
    formed against the filter state from the previous step, then the state is
    advanced; with that ordering a ramp of slope v yields exactly
    dq_hat_n = v * (1 - (1 - cutoff*dt)^n), which converges to v with no
    steady-state bias. (Differencing against the already-updated state would
    leave a permanent relative error of cutoff*dt, up to 18% at 90 rad/s.)
    """
    bank.dq_hat = bank.cutoff * (q_meas - bank.diff_lpf)
    bank.diff_lpf = lpf_update(bank.diff_lpf, q_meas, bank.cutoff, dt)
    return bank.dq_hat


def dob_update(bank: ObserverBank, tau_ref, dq_meas, jn, comp, dt: float) -> np.ndarray:
    """Velocity-form disturbance observer.

    tau_ref must be the torque actually applied to the plant minus the
    friction/gravity feedforward comp; tau_obs then tracks the remaining
    lumped disturbance below the cutoff. Returns tau_dis_hat = tau_obs + comp,
    the full compensation term injected by the control laws.
    """
    gjdq = bank.cutoff * jn * dq_meas
    bank.dob_lpf = lpf_update(bank.dob_lpf, tau_ref + gjdq, bank.cutoff, dt)
    bank.tau_obs = bank.dob_lpf - gjdq
    return bank.tau_obs + comp


def rfob_update(bank: ObserverBank, tau_ref, dq_meas, jn,
                friction_comp, gravity_comp, dt: float) -> np.ndarray:
    """Reaction force observer.

    tau_ref is the full torque applied to the plant (after saturation). The
    friction and gravity models are subtracted inside the filter, leaving a
    low-passed estimate of the external load torque alone. A biased gravity
    model propagates into the estimate as the same steady bias.
    """
    gjdq = bank.cutoff * jn * dq_meas
    x = tau_ref + gjdq - friction_comp - gravity_comp
    bank.rfob_lpf = lpf_update(bank.rfob_lpf, x, bank.cutoff, dt)
    bank.tau_res_hat = bank.rfob_lpf - gjdq
    return bank.tau_res_hat
