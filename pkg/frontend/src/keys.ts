/**
 * Keyboard capture: DOM key events -> wire key names, merged per tick.
 *
 * Keys outside the active game's table are dropped; keydowns landing in the
 * same animation tick merge into a single key message stamped with the
 * playback cursor at the time of capture.
 */
import type { GameName } from "./protocol";

const ARM_KEYS: Record<string, string> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
};

const QUADROTOR_KEYS: Record<string, string> = {
  ArrowUp: "up",
  ArrowDown: "down",
  KeyW: "w",
  KeyS: "s",
  KeyA: "a",
  KeyD: "d",
};

export function keyNameFor(game: GameName, code: string): string | null {
  const table = game === "arm_game" ? ARM_KEYS : QUADROTOR_KEYS;
  return table[code] ?? null;
}

export interface KeyBatch {
  keys: string[];
  t: number;
}

/**
 * Collects keydowns between ticks.  `press` records a DOM key code at the
 * current cursor; `flush` returns at most one merged batch per tick.
 */
export class KeyCollector {
  private pending = new Set<string>();
  private tAtFirstPress = 0;

  constructor(private game: GameName) {}

  press(code: string, cursor: number): boolean {
    const name = keyNameFor(this.game, code);
    if (name === null) return false;
    if (this.pending.size === 0) this.tAtFirstPress = cursor;
    this.pending.add(name);
    return true;
  }

  flush(): KeyBatch | null {
    if (this.pending.size === 0) return null;
    const batch = { keys: [...this.pending], t: this.tAtFirstPress };
    this.pending.clear();
    return batch;
  }
}
