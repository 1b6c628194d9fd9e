/**
 * Browser entry point: connect to the game service, render playback, and
 * forward keyboard corrections.  Configuration via URL query:
 *
 *   ?game=arm_game|quadrotor_game     (default arm_game)
 *   &server=ws://host:port/ws         (default ws://<host>/ws)
 *   &theta_star=0.5,0.5,...           (demo mode: chart the squared error)
 */
import { drawArm } from "./armView";
import { drawChart } from "./charts";
import { KeyCollector } from "./keys";
import { GAMES, encodeClientMessage, parseServerMessage, type GameName } from "./protocol";
import { drawQuadrotor } from "./quadView";
import { applyMessage, currentFrame, initialState, type ViewState } from "./state";

const params = new URLSearchParams(window.location.search);
const game = (GAMES as readonly string[]).includes(params.get("game") ?? "")
  ? (params.get("game") as GameName)
  : "arm_game";
const serverUrl =
  params.get("server") ?? `ws://${window.location.hostname}:8731/ws`;
const thetaStar = params.get("theta_star")
  ? params.get("theta_star")!.split(",").map(Number)
  : null;

let state: ViewState = initialState(game, thetaStar);
const collector = new KeyCollector(game);

const scene = document.getElementById("scene") as HTMLCanvasElement;
const chart = document.getElementById("chart") as HTMLCanvasElement;
const status = document.getElementById("status")!;
const thetaTable = document.getElementById("theta")!;

const ws = new WebSocket(serverUrl);
ws.onopen = () => {
  state = { ...state, connected: true, statusText: "connected" };
  ws.send(encodeClientMessage({ type: "start", game }));
};
ws.onclose = () => {
  state = { ...state, connected: false, statusText: "disconnected" };
};
ws.onmessage = (event: MessageEvent) => {
  const message = parseServerMessage(String(event.data));
  if (message === null) {
    console.warn("skipping malformed message", event.data);
    return;
  }
  state = applyMessage(state, message);
};

window.addEventListener("keydown", (event) => {
  if (state.phase !== "playing") return;
  if (collector.press(event.code, state.cursor)) event.preventDefault();
});

document.getElementById("confirm")!.addEventListener("click", () => {
  ws.send(encodeClientMessage({ type: "confirm" }));
});
document.getElementById("reset")!.addEventListener("click", () => {
  ws.send(encodeClientMessage({ type: "reset" }));
});

let azimuth = 0.6;
function tick(): void {
  const batch = collector.flush();
  if (batch !== null && ws.readyState === WebSocket.OPEN) {
    ws.send(encodeClientMessage({ type: "key", keys: batch.keys, t: batch.t }));
  }

  const frame = currentFrame(state);
  if (frame !== null) {
    if (game === "arm_game") {
      drawArm(scene.getContext("2d")!, frame, scene.width, scene.height);
    } else {
      azimuth += 0.0015;
      drawQuadrotor(
        scene.getContext("2d")!,
        frame,
        state.frames.slice(0, state.cursor + 1),
        azimuth,
        scene.width,
        scene.height,
      );
    }
  }

  status.textContent = `${state.statusText}  (k=${state.k}, t=${state.cursor})`;
  thetaTable.textContent = state.theta.map((v) => v.toFixed(3)).join("   ");

  if (state.series.length > 0) {
    const ks = state.series.map((p) => p.k);
    const dim = state.series[0]!.theta.length;
    const seriesList = Array.from({ length: dim }, (_, i) => ({
      label: `theta[${i}]`,
      values: state.series.map((p) => p.theta[i] ?? 0),
    }));
    if (thetaStar) {
      seriesList.push({
        label: "squared error",
        values: state.series.map((p) => p.eTheta ?? 0),
      });
    }
    drawChart(chart.getContext("2d")!, ks, seriesList, chart.width, chart.height,
              thetaStar ? "weights and squared error per iteration" : "weights per iteration");
  }
  requestAnimationFrame(tick);
}
requestAnimationFrame(tick);
