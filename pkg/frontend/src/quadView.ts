/**
 * Quadrotor scene: quaternion attitude, a fixed slowly-orbiting camera, and
 * an orthographic projection onto the canvas.
 */
import { QUAD_SCENE } from "./scene";

export type Vec3 = [number, number, number];

/** Body-to-world direction cosine matrix of a scalar-first unit quaternion. */
export function quatToRotation(q: number[]): number[][] {
  const [w = 1, x = 0, y = 0, z = 0] = q;
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
    [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
    [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
  ];
}

/**
 * Orthographic world-to-screen: rotate about world z by the camera azimuth,
 * tilt by a fixed elevation, scale to pixels.  Pure so tests can pin the
 * target-marker correspondence.
 */
export function projectPoint(
  p: Vec3,
  azimuth: number,
  width: number,
  height: number,
): { x: number; y: number } {
  const elevation = 0.45;
  const ca = Math.cos(azimuth);
  const sa = Math.sin(azimuth);
  const rx = ca * p[0] - sa * p[1];
  const ry = sa * p[0] + ca * p[1];
  const ce = Math.cos(elevation);
  const se = Math.sin(elevation);
  const screenY = ce * p[2] - se * ry;
  const scale = Math.min(width, height) / 26; // world spans roughly [-12, 12]
  return { x: width / 2 + rx * scale, y: height * 0.55 - screenY * scale };
}

export function drawQuadrotor(
  ctx: CanvasRenderingContext2D,
  state: number[],
  trail: number[][],
  azimuth: number,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const project = (p: Vec3) => projectPoint(p, azimuth, width, height);

  // ground grid
  ctx.strokeStyle = "#e3e6e0";
  ctx.lineWidth = 1;
  for (let g = -10; g <= 10; g += 2) {
    line(ctx, project([g, -10, 0]), project([g, 10, 0]));
    line(ctx, project([-10, g, 0]), project([10, g, 0]));
  }

  // gate: a rectangle standing in the x-z 45-degree plane facing the path
  const { center, halfWidth, halfHeight } = QUAD_SCENE.gate;
  const across: Vec3 = [Math.SQRT1_2, -Math.SQRT1_2, 0];
  const corners: Vec3[] = [
    [-1, -1], [1, -1], [1, 1], [-1, 1],
  ].map(([u, v]) => [
    center[0] + (u ?? 0) * halfWidth * across[0],
    center[1] + (u ?? 0) * halfWidth * across[1],
    center[2] + (v ?? 0) * halfHeight,
  ]);
  ctx.strokeStyle = "#8a5a2b";
  ctx.lineWidth = 4;
  ctx.beginPath();
  corners.forEach((c, i) => {
    const s = project(c);
    if (i === 0) ctx.moveTo(s.x, s.y);
    else ctx.lineTo(s.x, s.y);
  });
  ctx.closePath();
  ctx.stroke();

  // start and target markers
  marker(ctx, project(QUAD_SCENE.start), "#7a8a99");
  marker(ctx, project(QUAD_SCENE.target), "#3a7d44");

  // flown path so far
  ctx.strokeStyle = "#9db4c0";
  ctx.lineWidth = 2;
  ctx.beginPath();
  trail.forEach((s, i) => {
    const pt = project([s[0] ?? 0, s[1] ?? 0, s[2] ?? 0]);
    if (i === 0) ctx.moveTo(pt.x, pt.y);
    else ctx.lineTo(pt.x, pt.y);
  });
  ctx.stroke();

  // body: two rotor arms along the body x and y axes
  const r: Vec3 = [state[0] ?? 0, state[1] ?? 0, state[2] ?? 0];
  const R = quatToRotation(state.slice(6, 10));
  const armLen = 1.0;
  const axes: Vec3[] = [
    [R[0]![0]!, R[1]![0]!, R[2]![0]!],
    [R[0]![1]!, R[1]![1]!, R[2]![1]!],
  ];
  ctx.lineWidth = 5;
  for (const [axis, color] of [
    [axes[0], "#b03a2e"],
    [axes[1], "#2e5fb0"],
  ] as const) {
    const a = project([
      r[0] - armLen * axis![0],
      r[1] - armLen * axis![1],
      r[2] - armLen * axis![2],
    ]);
    const b = project([
      r[0] + armLen * axis![0],
      r[1] + armLen * axis![1],
      r[2] + armLen * axis![2],
    ]);
    ctx.strokeStyle = color;
    line(ctx, a, b);
    for (const end of [a, b]) {
      ctx.beginPath();
      ctx.arc(end.x, end.y, 4, 0, 2 * Math.PI);
      ctx.fillStyle = color;
      ctx.fill();
    }
  }
}

function line(
  ctx: CanvasRenderingContext2D,
  a: { x: number; y: number },
  b: { x: number; y: number },
): void {
  ctx.beginPath();
  ctx.moveTo(a.x, a.y);
  ctx.lineTo(b.x, b.y);
  ctx.stroke();
}

function marker(
  ctx: CanvasRenderingContext2D,
  at: { x: number; y: number },
  color: string,
): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(at.x, at.y, 7, 0, 2 * Math.PI);
  ctx.fill();
}
