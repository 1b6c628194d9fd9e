/**
 * Two-link arm scene: forward kinematics plus canvas drawing.
 *
 * Joint angles are measured from the +x axis (q1) and from link 1 (q2), so
 * q = [-pi/2, 0] points the extended arm straight down and [pi/2, 0]
 * straight up (the target pose).
 */
import { ARM_SCENE } from "./scene";

export interface Point {
  x: number;
  y: number;
}

export function linkPoints(
  q1: number,
  q2: number,
  lengths: [number, number] = ARM_SCENE.linkLengths,
): { base: Point; elbow: Point; tip: Point } {
  const [l1, l2] = lengths;
  const elbow = { x: l1 * Math.cos(q1), y: l1 * Math.sin(q1) };
  const tip = {
    x: elbow.x + l2 * Math.cos(q1 + q2),
    y: elbow.y + l2 * Math.sin(q1 + q2),
  };
  return { base: { x: 0, y: 0 }, elbow, tip };
}

/** World (meters, y up) to canvas pixels (y down), arm base centered. */
export function worldToScreen(p: Point, width: number, height: number): Point {
  const scale = Math.min(width, height) / 5; // world spans roughly [-2.5, 2.5]
  return { x: width / 2 + p.x * scale, y: height / 2 - p.y * scale };
}

export function drawArm(
  ctx: CanvasRenderingContext2D,
  state: number[],
  width: number,
  height: number,
): void {
  const [q1, q2] = [state[0] ?? 0, state[1] ?? 0];
  ctx.clearRect(0, 0, width, height);
  const scale = Math.min(width, height) / 5;

  // obstacle
  const obs = worldToScreen(
    { x: ARM_SCENE.obstacle.center[0], y: ARM_SCENE.obstacle.center[1] },
    width,
    height,
  );
  ctx.fillStyle = "#e8863a";
  ctx.beginPath();
  ctx.arc(obs.x, obs.y, ARM_SCENE.obstacle.radius * scale, 0, 2 * Math.PI);
  ctx.fill();

  // target pose ghost
  const target = linkPoints(
    ARM_SCENE.targetJointAngles[0],
    ARM_SCENE.targetJointAngles[1],
  );
  drawLinks(ctx, target.base, target.elbow, target.tip, width, height, "#c9d4c5", 4);

  // arm
  const pose = linkPoints(q1, q2);
  drawLinks(ctx, pose.base, pose.elbow, pose.tip, width, height, "#2d4739", 8);
  for (const joint of [pose.base, pose.elbow]) {
    const s = worldToScreen(joint, width, height);
    ctx.fillStyle = "#1b2e22";
    ctx.beginPath();
    ctx.arc(s.x, s.y, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function drawLinks(
  ctx: CanvasRenderingContext2D,
  base: Point,
  elbow: Point,
  tip: Point,
  width: number,
  height: number,
  color: string,
  lineWidth: number,
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = lineWidth;
  ctx.lineCap = "round";
  ctx.beginPath();
  const b = worldToScreen(base, width, height);
  const e = worldToScreen(elbow, width, height);
  const t = worldToScreen(tip, width, height);
  ctx.moveTo(b.x, b.y);
  ctx.lineTo(e.x, e.y);
  ctx.lineTo(t.x, t.y);
  ctx.stroke();
}
