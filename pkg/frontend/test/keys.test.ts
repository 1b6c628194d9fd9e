import { describe, expect, it } from "vitest";

import { KeyCollector, keyNameFor } from "../src/keys";

describe("key mapping", () => {
  it("maps arm arrows to wire names", () => {
    expect(keyNameFor("arm_game", "ArrowUp")).toBe("up");
    expect(keyNameFor("arm_game", "ArrowLeft")).toBe("left");
  });

  it("maps quadrotor letters", () => {
    expect(keyNameFor("quadrotor_game", "KeyS")).toBe("s");
    expect(keyNameFor("quadrotor_game", "ArrowDown")).toBe("down");
  });

  it("drops keys outside the game table", () => {
    expect(keyNameFor("arm_game", "KeyX")).toBeNull();
    expect(keyNameFor("arm_game", "KeyW")).toBeNull(); // quadrotor-only key
  });
});

describe("key collector", () => {
  it("stamps the batch with the cursor at first press", () => {
    const c = new KeyCollector("arm_game");
    expect(c.press("ArrowUp", 11)).toBe(true);
    const batch = c.flush();
    expect(batch).toEqual({ keys: ["up"], t: 11 });
    expect(c.flush()).toBeNull();
  });

  it("merges simultaneous keys within one tick", () => {
    const c = new KeyCollector("arm_game");
    c.press("ArrowUp", 10);
    c.press("ArrowLeft", 10);
    const batch = c.flush();
    expect(batch!.t).toBe(10);
    expect([...batch!.keys].sort()).toEqual(["left", "up"]);
  });

  it("ignores unknown keys entirely", () => {
    const c = new KeyCollector("arm_game");
    expect(c.press("KeyX", 3)).toBe(false);
    expect(c.flush()).toBeNull();
  });

  it("dedupes repeats of the same key in a tick", () => {
    const c = new KeyCollector("quadrotor_game");
    c.press("KeyS", 5);
    c.press("KeyS", 5);
    expect(c.flush()).toEqual({ keys: ["s"], t: 5 });
  });
});
