/** Scene constants mirroring the service's task presets. */

export const ARM_SCENE = {
  linkLengths: [1.0, 1.0] as [number, number],
  obstacle: { center: [1.55, 0.5] as [number, number], radius: 0.3 },
  targetJointAngles: [Math.PI / 2, 0.0] as [number, number],
};

export const QUAD_SCENE = {
  start: [-8, -8, 5] as [number, number, number],
  target: [8, 8, 0] as [number, number, number],
  gate: { center: [0, 0, 4] as [number, number, number], halfWidth: 1.5, halfHeight: 1.5 },
};
