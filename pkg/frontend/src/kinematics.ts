/** Planar drawing geometry of the bench arms.
 *
 * The dashboard draws the joint-2/joint-4 vertical plane: angles measure
 * from the upward vertical, the shoulder sits at the origin, so the all-zero
 * pose points straight up. These constants describe the stock bench; they
 * are presentation-only — simulation truth always arrives via the stream
 * (`contact.tip` is the engine's own tip position).
 */

/** Proximal link (shoulder to elbow), meters. */
export const L_PROXIMAL = 0.25;
/** Distal link (elbow to tool tip), meters. */
export const L_DISTAL = 0.2865;
/** Worst-case tip moment arm; bounds drag forces so mapped torques stay
 * inside the server's per-joint clamp. */
export const REACH = L_PROXIMAL + L_DISTAL;

/** Stock rack layout: hole mouth centers (x, y) and wall depth, meters. */
export const SOURCE_HOLE: readonly [number, number] = [0.22, 0.26];
export const TARGET_HOLE: readonly [number, number] = [0.34, 0.26];
export const HOLE_DEPTH = 0.09;
export const HOLE_MOUTH_HALF_WIDTH = 0.013;

export interface ArmPose {
  shoulder: [number, number];
  elbow: [number, number];
  tip: [number, number];
}

/** Forward kinematics of the planar pair (theta2 = q[1], theta4 = q[3]). */
export function armPose(q: readonly number[]): ArmPose {
  const th2 = q[1];
  const th24 = th2 + q[3];
  const ex = L_PROXIMAL * Math.sin(th2);
  const ey = L_PROXIMAL * Math.cos(th2);
  return {
    shoulder: [0, 0],
    elbow: [ex, ey],
    tip: [ex + L_DISTAL * Math.sin(th24), ey + L_DISTAL * Math.cos(th24)],
  };
}
