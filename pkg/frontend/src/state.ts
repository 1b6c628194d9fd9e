/**
 * Client view state: a pure reducer over server messages.
 *
 * The rendered frame always corresponds to the latest frame message of the
 * current iteration, the theta table always equals the last plan message,
 * and chart series extend only when an iteration completes.
 */
import type { GameName, ServerMessage } from "./protocol";

export type Phase = "idle" | "playing" | "done" | "error";

export interface ChartPoint {
  k: number;
  theta: number[];
  eTheta: number | null;
}

export interface ViewState {
  game: GameName;
  phase: Phase;
  connected: boolean;
  k: number;
  theta: number[];
  frames: number[][];
  cursor: number; // index of the frame currently shown
  series: ChartPoint[];
  thetaStar: number[] | null; // demo mode: chart the squared error
  lastCuts: number;
  statusText: string;
}

export function initialState(game: GameName, thetaStar: number[] | null = null): ViewState {
  return {
    game,
    phase: "idle",
    connected: false,
    k: 0,
    theta: [],
    frames: [],
    cursor: 0,
    series: [],
    thetaStar,
    lastCuts: 0,
    statusText: "connecting",
  };
}

export function squaredError(theta: number[], thetaStar: number[]): number {
  let total = 0;
  for (let i = 0; i < theta.length; i++) {
    const d = (theta[i] ?? 0) - (thetaStar[i] ?? 0);
    total += d * d;
  }
  return total;
}

/** Apply one validated server message; unknown input never throws. */
export function applyMessage(state: ViewState, message: ServerMessage): ViewState {
  switch (message.type) {
    case "plan":
      return {
        ...state,
        phase: "playing",
        k: message.k,
        theta: message.theta,
        frames: [],
        cursor: 0,
        statusText: `iteration ${message.k}: playing`,
      };
    case "frame": {
      const frames = state.frames.slice();
      frames[message.t] = message.state;
      return { ...state, frames, cursor: message.t };
    }
    case "iteration_done": {
      const point: ChartPoint = {
        k: message.k,
        theta: state.theta,
        eTheta: state.thetaStar ? squaredError(state.theta, state.thetaStar) : null,
      };
      return {
        ...state,
        series: [...state.series, point],
        lastCuts: message.cuts,
        statusText: `iteration ${message.k} done (${message.cuts} corrections), replanning`,
      };
    }
    case "done":
      return {
        ...state,
        phase: "done",
        theta: message.theta,
        statusText: `done: ${message.reason}`,
      };
    case "error":
      return { ...state, phase: "error", statusText: `error: ${message.message}` };
  }
}

/** The state vector to draw right now, or null before the first frame. */
export function currentFrame(state: ViewState): number[] | null {
  return state.frames[state.cursor] ?? null;
}
