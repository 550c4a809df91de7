"""Desk-scale simulator for bilateral teaching, motion copying, and retouching.

The package is organized as:

- model: arm dynamics, kinematics, and the tube-rack contact environment
- observers: velocity estimation, disturbance observer, reaction force observer
- control: four-channel bilateral, motion-copy, and multilateral control laws
- tape: recorded motion files (position, velocity, torque per tick)
- scenario: task scripts, hand impedance model, intervention profiles
- engine: the run loops (teach / copy / retouch), logging, task scoring
- session: live retouch sessions over WebSocket
- cli: command line entry points
"""

from .model import (N_JOINTS, ContactInfo, PegTaskEnv, RobotParams, RobotState,
                    contact_torque, forward_kinematics_planar, gravity_vector,
                    ik_planar, inertia_matrix, planar_jacobian, step_dynamics)
from .observers import (ObserverBank, dob_update, lpf_update,
                        pseudo_diff_update, rfob_update)
from .control import (TORQUE_LIMIT, CommandFrame, ControlOutput, Gains,
                      UnitFeedback, bilateral_4ch_step, blend_command,
                      force_p, motion_copy_step, multilateral_step,
                      position_pd, retouch_step, saturate)
from .tape import (Tape, TapeMeta, TapeSample, append_sample, load_tape,
                   sample_at, save_tape, speed_up)
from .scenario import (HandModel, InterventionProfile, InterventionWindow,
                       Scenario, default_fix3x_profile, default_tube_transfer,
                       load_intervention, load_scenario, press_scenario,
                       save_intervention, save_scenario)
from .engine import (EngineError, RunLog, SuccessReport, evaluate_success,
                     load_log_columns, run_copy, run_retouch, run_teach,
                     save_log_csv)
from .protocol import (INTERVENTION_LIMIT, SNAPSHOT_DECIMATION, STALENESS_SEC,
                       ProtocolError, clamp_torque, drag_to_torque, encode,
                       parse)
from .session import (LiveBridge, SessionError, SessionServer, load_timeline,
                      run_live_retouch, save_timeline)

__version__ = "0.1.0"
